// Bound states in the spectral gap of D+K, the exact infinite-time dephasing
// mean of the evolved free covariance, the idealized steady-state covariance
// (quasi-continuum block from D+K, bound blocks frozen at their initial
// occupations), and finite-horizon return-to-equilibrium probes.
#pragma once

#include <vector>

#include "entropy.hpp"
#include "linop.hpp"

namespace fkms {

struct GapSpectrum {
  std::vector<double> gap_eigenvalues;
  std::vector<Vector> gap_eigenvectors;
  Matrix quasi_continuum_projector;
  bool degenerate_gap = false;  // some gap pair closer than the merge threshold
};

// Eigenvalues of D+K strictly inside (-m, m) (up to 1e-9) are bound states.
GapSpectrum bound_states(const HermitianOperator& D, const HermitianOperator& K,
                         double mass);

// Exact infinite-time Cesaro mean of e^{it(D+K)} F_-(D) e^{-it(D+K)}: the
// dephasing of F_-(D) over the eigenprojections of D+K, with eigenvalues
// closer than 1e-10 x spread merged into one block.
Covariance ergodic_covariance(const HermitianOperator& D,
                              const HermitianOperator& K, double beta);

// P_qc F_-(D+K) P_qc + sum_j P_{s_j} F_-(D) P_{s_j}; rejects degenerate gap
// eigenvalues (the closed entropy form assumes nondegeneracy).
Covariance ness_ideal_covariance(const GapSpectrum& gap,
                                 const HermitianOperator& D,
                                 const HermitianOperator& K, double beta);

// Bound-state data feeding the closed-form NESS entropy.
std::vector<BoundStateDatum> bound_state_data(const GapSpectrum& gap,
                                              const HermitianOperator& D,
                                              double beta);

// Operator-norm distance between the dephasing mean and the idealized
// covariance on the quasi-continuum block.
double ness_vs_ergodic_gap(const HermitianOperator& D, const HermitianOperator& K,
                           double beta, double mass);

struct ReturnProbeReport {
  std::vector<double> horizons;
  // per probe pair, per horizon: |<f, (avg_T - F_-(D+K)) g>|
  std::vector<std::vector<double>> cesaro_gaps;
  // conserved bound-block occupations and their equilibrium mismatch
  std::vector<double> bound_occupations;
  std::vector<double> bound_mismatches;
};

ReturnProbeReport return_to_equilibrium_probe(const HermitianOperator& D,
                                              const HermitianOperator& K,
                                              double beta,
                                              const std::vector<Vector>& probes,
                                              const std::vector<double>& horizons,
                                              double mass);

}  // namespace fkms
