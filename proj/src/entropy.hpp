// Relative entropy between the free and the perturbed thermal state by four
// independent routes, the Eulerian resummation for commuting rank-one data,
// the closed form for the NESS, and entropy production along the perturbed
// evolution.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kms.hpp"
#include "linop.hpp"

namespace fkms {

struct ScalarSeries {
  double value;
  int order;
  double truncation_bound;
  double quadrature_estimate;
};

struct EntropyReport {
  ScalarSeries s_series;
  double s_integral;
  double s_integral_estimate;
  double s_closed;
  double s_kl;
  // pairwise absolute differences, order (series, integral, closed, kl)
  std::array<std::array<double, 4>, 4> agreement_matrix;
};

// Trace of the entropy operator assembled order by order from the cube
// expansion, with the beta/(n+1) weight per order. Starts at n = 1 inside the
// operator, so the scalar is O(|K|^2).
ScalarSeries rel_entropy_series(const KmsSpec& spec, int N, int quad_points);

// Tr( beta K int_0^1 [Ftil(D) - Ftil(D + uK)] du ), Ftil(M) = (1+e^{beta M})^{-1},
// by Gauss-Legendre in u.
double rel_entropy_integral(const KmsSpec& spec, int u_quad);

// Tr( beta K (1+e^{beta D})^{-1} + log(1+e^{-beta(D+K)}) - log(1+e^{-beta D}) ).
double rel_entropy_closed(const KmsSpec& spec);

// Tr( A(log A - log B) + (1-A)(log(1-A) - log(1-B)) ) for generic covariances;
// rejects spectra within 1e-12 of 0 or 1.
double rel_entropy_kl(const Covariance& A, const Covariance& B);

// All four routes; s_kl is evaluated from the beta D / beta (D+K) spectral
// data directly (log A and log(1-A) never pass through the covariance's
// rounded eigenvalues), which keeps low temperatures exact.
EntropyReport entropy_report(const KmsSpec& spec, int N, int quad_points,
                             int u_quad);

// Eulerian numbers A(n, 0..n-1), exact up to n = 20.
std::vector<std::uint64_t> eulerian(int n);

struct GeneratingCheck {
  double lhs, rhs, gap;                      // G(x,u) = sum A_n(u) x^n / n!
  double lhs_int, rhs_int, gap_int;          // integrated form G~(x,u)
};
GeneratingCheck eulerian_generating_check(double x, double u, int N);

// Bound-state record: s eigenvalue of D+K in the gap, d the matching Fermi
// parameter of the free covariance on that eigenvector, k = d - s.
struct BoundStateDatum {
  double s;
  double d;
  double k;
  double occupation;  // (1+e^{-beta d})^{-1}
};

double ness_rel_entropy_closed(double beta,
                               const std::vector<BoundStateDatum>& bound_states);
double ness_rel_entropy_eulerian(double beta,
                                 const std::vector<BoundStateDatum>& bound_states,
                                 int orders = 30);
// -d/de log Z(beta,e)|_0 + log Z(beta,1) - log Z(beta,0) with
// Z(beta,e) = prod_j (1 + e^{-beta(s_j + e k_j)}).
double ness_partition_identity(double beta,
                               const std::vector<BoundStateDatum>& bound_states);

struct EntropyProduction {
  double t;
  double S_t;            // relative entropy of the evolved state
  double E_analytic;     // trace expression with the Frechet u-derivative term
  double E_finite_diff;  // symmetric difference quotient of S
};

EntropyProduction entropy_production(const KmsSpec& spec, double t,
                                     int u_quad = 24, double fd_step = 1e-3);

struct EntropyProductionSweep {
  std::vector<double> t_grid;
  std::vector<double> S;
  std::vector<double> E_analytic;
  std::vector<double> E_finite_diff;
  double cumulative_residual;  // |int_0^T E dt - S(T)|
};

EntropyProductionSweep entropy_production_sweep(const KmsSpec& spec, double t_max,
                                                int time_nodes, int u_quad = 24);

}  // namespace fkms
