// Quantitative checks of the Hilbert-Schmidt and kernel bounds: the S-matrix
// HS estimate for compact-in-time potentials, the kernel domination
// |Khat(p,q)| <= H(p-q) with its L1/L2 bounds, the HS bound on P K Q, the
// adiabatic 1/T^2 decay, stationary-phase decay exponents, Powers-Stormer
// and Lundberg criteria, and the purification projection.
//
// Section conventions here are the vacuum ones: P, Q and the free evolution
// come from the Dirac operator without the chemical shift. Lattice kernels
// are converted to continuum normalization by the momentum cell volume, and
// integrals over momentum become cell-weighted sums. The HS weight constant
// is dimension aware: || (p^2+m^2)^{-1} ||_{L^2(d^d p)} = pi/sqrt(m) in 3D
// and sqrt(pi/2) m^{-3/2} in 1D.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "linop.hpp"
#include "model.hpp"

namespace fkms {

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  std::string inputs_digest;

  bool pass() const { return margin >= -1e-9 * rhs; }
};

struct KernelBound {
  Eigen::VectorXd H;  // per displacement, flat torus order, continuum scale
  double l1 = 0.0;
  double l2 = 0.0;
};

struct KernelDomination {
  KernelBound bound;
  double worst_gap = 0.0;  // max over (p,q) of |Khat| - H(p-q); negative is good
  bool pointwise_pass = false;
  BoundCheck l1_check;
  BoundCheck l2_check;
};

// Truncated second-order jet in the expansion parameter; evaluates the
// lambda-second-derivative prefactors of the displayed bounds without hand
// simplification.
struct Jet2 {
  double v = 0.0, d1 = 0.0, d2 = 0.0;

  static Jet2 quadratic(double a, double b, double c) { return {a, b, c}; }
  Jet2 operator*(const Jet2& o) const {
    return {v * o.v, d1 * o.v + v * o.d1, d2 * o.v + 2.0 * d1 * o.d1 + v * o.d2};
  }
  Jet2 exp() const;
};

double hs_weight_constant(int spatial_dim, double mass);

// |P U(A) Q|_HS against the closed-form bound, for the time-compact
// round-trip potential g(t) = h(t) - h(t - hold - w) (switch on, hold, switch
// off), which is the regime of the bound's hypotheses.
BoundCheck hs_bound_U(const LatticeModel& model, const PotentialProfile& profile,
                      double hold_time, double step);

// Builds H = exp_*(int|Ahat|) * int|Adot-hat| * exp_*(int|Ahat|) on the
// displacement torus, checks |Khat(p,q)| <= H(p-q) + 1e-8 pointwise and the
// L1/L2 bounds of H.
KernelDomination kernel_bound_H(const LatticeModel& model,
                                const PotentialProfile& profile,
                                const HermitianOperator& K);

// |P K Q|_HS against the epsilon-weighted jet bound.
BoundCheck hs_bound_K(const LatticeModel& model, const PotentialProfile& profile,
                      const HermitianOperator& K);

struct AdiabaticSweep {
  std::vector<double> T_values;
  std::vector<double> hs_norms;  // |P K(T) Q|_HS
  double fitted_exponent = 0.0;
  double r_squared = 0.0;
  bool conclusive = false;  // r^2 >= 0.95
};

AdiabaticSweep adiabatic_sweep(const LatticeModel& model,
                               const PotentialProfile& base_profile,
                               const std::vector<double>& T_list, double step);

struct StationaryPhase {
  std::vector<double> t_grid;
  std::vector<double> values;  // |cell * sum_k e^{i omega(k) t} f(|k|)|
  double fitted_exponent = 0.0;
  double r_squared = 0.0;
  bool conclusive = false;
};

StationaryPhase stationary_phase(int spatial_dim, double box_length,
                                 int n_modes_per_axis, double mass,
                                 const std::function<double(double)>& f,
                                 const std::vector<double>& t_grid);

struct PowersStormerPoint {
  int n_modes;
  double hs_sqrt;            // |A^{1/2} - B^{1/2}|_HS
  double hs_sqrt_complement; // |(1-A)^{1/2} - (1-B)^{1/2}|_HS
};

std::vector<PowersStormerPoint> powers_stormer(
    const std::vector<LatticeModel>& models,
    const std::function<PotentialProfile(const LatticeModel&)>& profile_of,
    double beta, double step);

// |sqrt(A) X sqrt(1-A)|_HS with A = F_-(D, beta).
double lundberg_check(const HermitianOperator& D, const Matrix& X, double beta);

struct Purification {
  Matrix E;       // 2dim x 2dim block operator, both diagonal blocks A
  double defect;  // |E^2 - E|_op
};

// Builds the block operator exactly as displayed, with A on both diagonal
// blocks, and reports how far it is from a projection. (The textbook
// purification carries 1-A in the lower-right block and is an exact
// projection; the displayed variant is idempotent only where (2A-1)A(1-A)
// vanishes, and the defect makes that visible instead of correcting it.)
Purification purification(const Covariance& A);

}  // namespace fkms
