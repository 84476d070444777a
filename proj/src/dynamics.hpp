// Ordered exponentials in the interaction picture, the smoothed interaction
// operator K obtained from the switching window, the interacting cocycle
// U_t = V_0 e^{it(D+A_+)} V_0^{-1} e^{-itD}, Moller approximants and Cook
// decay curves.
#pragma once

#include <functional>
#include <vector>

#include "linop.hpp"
#include "model.hpp"

namespace fkms {

struct OrderedEvolution {
  Matrix V;
  double t0 = 0.0;
  double t1 = 0.0;
  int step_count = 0;
  double unitarity_defect = 0.0;
};

// Time-dependent potential Aslash(t) = weight(t) * A with fixed hermitian A.
// All scenarios in this artifact are of this separable form; it admits an
// exactly unitary midpoint-exponential product with two dense multiplies per
// step (both exponentials come from fixed spectral data).
struct SeparablePotential {
  Matrix A;                              // hermitian spatial part
  std::function<double(double)> weight;  // scalar time profile
};

OrderedEvolution dyson_evolve(const HermitianOperator& D,
                              const SeparablePotential& At, double t0,
                              double t1, double step);

struct InteractionOperator {
  HermitianOperator K;
  double dual_formula_gap;  // |K_integral - (V0 (D+A_+) V0^-1 - D)|_op
  Matrix V0;
};

// K = int_{-w}^{0} V_s e^{isD} Adot(s) e^{-isD} V_s^{-1} ds on the switching
// window w = epsilon * T_adiabatic, with quadrature nodes on the dyson grid.
// Throws if the quadrature and the dual formula disagree beyond
// 100x the estimated integrator error.
InteractionOperator compute_K(const HermitianOperator& D,
                              const HermitianOperator& Aplus,
                              const SwitchSchedule& schedule, double step);

struct Cocycle {
  HermitianOperator D;
  HermitianOperator K;
  Matrix V0;
  HermitianOperator Aplus;
};

Cocycle make_cocycle(const HermitianOperator& D, const HermitianOperator& Aplus,
                     const SwitchSchedule& schedule, double step);

// V0 e^{it(D+A_+)} V0^{-1} e^{-itD}; t < 0 via U_{-t} = e^{-itD} U_t^* e^{itD}.
Matrix cocycle_at(const Cocycle& c, double t);

// Same cocycle through the generator route, e^{it(D+K)} e^{-itD}.
Matrix cocycle_via_K(const Cocycle& c, double t);

struct MollerReport {
  std::vector<double> t_grid;
  // per probe: |(Omega(t_{i+1}) - Omega(t_i)) f|
  std::vector<std::vector<double>> increment_curves;
  // per probe: |g(D+K) Omega(t) f - Omega(t) g(D) f| with g the Fermi map
  std::vector<std::vector<double>> intertwining_residuals;
  // per probe: Cesaro-averaged intertwining gap of matrix elements at horizon T = t
  std::vector<std::vector<double>> cesaro_residuals;
  std::vector<double> isometry_defects;  // max over grid per probe
};

MollerReport moller(const HermitianOperator& D, const HermitianOperator& K,
                    const std::vector<double>& t_grid,
                    const std::vector<Vector>& probes, double beta = 1.0);

struct DecayCurve {
  std::vector<double> t_grid;
  std::vector<double> values;
  double tail_slope = 0.0;
  double tail_r_squared = 0.0;
};

// |K e^{itH} f| over t_grid; tail fit over the upper half of the grid.
DecayCurve cook_decay(const HermitianOperator& H, const Matrix& K,
                      const Vector& f, const std::vector<double>& t_grid);

}  // namespace fkms
