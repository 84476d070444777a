// Thermal two-point functions and the imaginary-time expansion of the
// perturbed KMS covariance:
//
//   T(ub) = F_-(D) + sum_{n>0} (-1)^n int_{(0,ub)^n} F_- prod_j [K_{iu_j}
//           F_{sigma(u_j - u_{j+1})}] K_{iu_n} F_+  d^n u,
//
// with K_{iu} = e^{-uD} K e^{uD}. Every factor is assembled in the
// stabilized grouping e^{-+ aD}/(1 + e^{-+ beta D}), a in [0, beta], which
// has operator norm <= 1, so nothing overflows at low temperature.
//
// The cube integrand jumps across the diagonals u_j = u_{j+1} (the sigma
// branches differ by the identity), so the per-axis Gauss-Legendre rule is
// applied on subintervals split at the running breakpoint; plain unsplit
// tensor quadrature stalls near 1e-3 accuracy. Orders n >= 5 use a Halton
// sequence instead.
#pragma once

#include <vector>

#include "linop.hpp"

namespace fkms {

struct KmsSpec {
  double beta;
  HermitianOperator D;
  HermitianOperator K;

  // beta * |K|_op; the series converges iff this is < 1
  double contraction() const;
};

struct TwoPoint {
  Complex create_annihilate;  // omega(psi(f) psi(g)^*) = <f, T g>
  Complex annihilate_create;  // omega(psi(g)^* psi(f)) = <f, (1-T) g>
};

TwoPoint kms_two_point(const Covariance& T, const Vector& f, const Vector& g);

Complex quasifree_npoint(const Covariance& T, const std::vector<Vector>& fs,
                         const std::vector<Vector>& gs);

struct OperatorSeries {
  Matrix value;
  int order;
  double truncation_bound;
  double quadrature_estimate;
};

// Partial sum of T(u_bar) to order N. quad_points is the per-axis
// Gauss-Legendre count for n <= 4; higher orders use Halton quasi-Monte
// Carlo with (1 << 13) samples. Throws if contraction >= 1.
OperatorSeries t_series(const KmsSpec& spec, double u_bar, int N,
                        int quad_points, bool with_estimate = true);

// Order-n term alone (original basis), production quadrature.
Matrix t_series_term(const KmsSpec& spec, double u_bar, int n, int quad_points);

// Order-n term with an explicit Halton sample count (any n >= 2).
Matrix t_series_term_qmc(const KmsSpec& spec, double u_bar, int n,
                         long long samples);

// N applications of the Fermi-factor recursion starting from the free term,
// on a uniform imaginary-time grid; returns |W_N(0) - F_-(D+K)|_op.
double t_recursive_residual(const KmsSpec& spec, int N, int grid_points = 192);
std::vector<double> t_recursive_residuals(const KmsSpec& spec, int N,
                                          int grid_points = 192);

// Order-n term evaluated once as the permutation sum over the simplex and
// once as the cube integral; returns the operator-norm difference. n <= 3.
double simplex_cube_check(const KmsSpec& spec, int n, int quad_points);

}  // namespace fkms
