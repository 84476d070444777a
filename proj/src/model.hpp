// Discretized free Dirac operator on a periodic momentum lattice, external
// potentials as multiplication operators, and the smooth switching schedule.
//
// Conventions: momenta k = (2*pi/L) n with integer n in [-(N-1)/2, (N-1)/2]
// per axis (N odd, so k = 0 is a grid point). Position sites x = (L/N) j,
// j in [0, N-1]. The one-particle space is C^{spinor_dim * N^d} with the
// plain inner product; basis order is (mode, spinor component), modes in
// lexicographic order of n.
//
// 1D: alpha = sigma_1, beta matrix = sigma_3 (spinor_dim 2).
// 3D: Dirac representation, alpha_i = offdiag(sigma_i), beta = diag(1,1,-1,-1).
// No test may depend on representation-specific phases.
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "linop.hpp"

namespace fkms {

struct LatticeModel {
  int spatial_dim = 1;       // 1 or 3
  int n_modes_per_axis = 9;  // odd
  double box_length = 10.0;
  double mass = 1.0;
  double mu = 0.0;

  int spinor_dim() const { return spatial_dim == 1 ? 2 : 4; }
  int n_sites() const;
  int total_dim() const { return spinor_dim() * n_sites(); }
  double momentum_spacing() const;          // 2*pi/L
  double momentum_cell_volume() const;      // (2*pi/L)^d
  double max_momentum() const;              // per-axis cutoff
  void validate() const;

  // integer mode vector of flat site/mode index, components in [-(N-1)/2, (N-1)/2]
  std::array<int, 3> mode_of(int flat) const;
  std::array<double, 3> momentum_of(int flat) const;
  std::array<double, 3> site_of(int flat) const;  // positions, same flat order
};

enum class SwitchKind { bump_integral };

// h(t) = S((t + eps*T)/ (eps*T)) with S the normalized integral of the
// exp(-1/(x(1-x))) bump: h = 0 for t <= -eps*T, h = 1 for t >= 0, hdot >= 0.
struct SwitchSchedule {
  double window;  // eps * T_adiabatic, support of hdot is [-window, 0]
  SwitchKind kind = SwitchKind::bump_integral;

  double h(double t) const;
  double hdot(double t) const;
  double hddot(double t) const;
  double hdddot(double t) const;
};

struct SwitchSample {
  double h;
  double hdot;
  double hddot;
};

struct PotentialProfile {
  // components[mu], mu = 0..spatial_dim: A_mu sampled on the position grid
  // (flat site order). Each profile must vanish on the boundary band unless
  // uniform_test_override is set (used by commuting-scalar test cases).
  std::vector<Eigen::VectorXd> components;
  double epsilon = 1.0;
  double T_adiabatic = 1.0;
  SwitchKind switch_kind = SwitchKind::bump_integral;
  int boundary_band = 1;
  bool uniform_test_override = false;

  double window() const { return epsilon * T_adiabatic; }
  SwitchSchedule schedule() const { return SwitchSchedule{window(), switch_kind}; }
};

// Free Dirac in momentum space, exact symbol alpha.k + beta m (- mu).
HermitianOperator build_dirac(const LatticeModel& model, bool subtract_mu = true);

// gamma^0 gamma^mu A_mu as a matrix-valued multiplication operator,
// conjugated to the momentum basis; exactly convolutional in p - q.
HermitianOperator build_potential(const LatticeModel& model,
                                  const PotentialProfile& profile);

// Spinor block of the potential at one site: A^0 * 1 + sum_i alpha_i A^i.
Matrix potential_site_block(const LatticeModel& model,
                            const PotentialProfile& profile, int site);

SwitchSample switching(const PotentialProfile& profile, double t);

// Displacement kernel amplitudes a(dn) = |block DFT of the site profile| (op
// norm of the spinor block per displacement on the mode torus, flat order).
// These are the lattice stand-ins for |Ahat(k)|; the continuum kernel value
// is a(dn) / momentum_cell_volume.
Eigen::VectorXd displacement_amplitudes(const LatticeModel& model,
                                        const PotentialProfile& profile);

// Profile builders used by scenarios and tests.
PotentialProfile gaussian_well_profile(const LatticeModel& model,
                                       double amplitude, double width,
                                       int component, double epsilon,
                                       double T_adiabatic);
PotentialProfile uniform_profile(const LatticeModel& model, double value,
                                 int component, double epsilon,
                                 double T_adiabatic);

const Matrix& pauli(int i);           // sigma_1..sigma_3
Matrix alpha_matrix(int spatial_dim, int i);  // i = 1..spatial_dim
Matrix beta_matrix(int spatial_dim);

}  // namespace fkms
