#include "dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

namespace {

// diag(exp(i s lambda)) for spectral data
Vector phase_diag(const RealVector& lambda, double s) {
  Vector d(lambda.size());
  for (int i = 0; i < lambda.size(); ++i) d(i) = std::polar(1.0, s * lambda(i));
  return d;
}

}  // namespace

OrderedEvolution dyson_evolve(const HermitianOperator& D,
                              const SeparablePotential& At, double t0,
                              double t1, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("dyson_evolve: step must be positive");
  if (t1 < t0) throw std::invalid_argument("dyson_evolve: t1 < t0");
  if (hermiticity_defect(At.A) > 1e-9 * std::max(1.0, At.A.norm())) {
    throw std::invalid_argument("dyson_evolve: potential sample is not hermitian");
  }
  const int n = D.dim();
  const int steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
  const double dt = (t1 - t0) / steps;

  const auto& sdD = D.spectral();
  HermitianOperator Aop(At.A, 1e-9 * std::max(1.0, At.A.norm()));
  const auto& sdA = Aop.spectral();

  // One midpoint step is exp(i dt w(tm) e^{i tm D} A e^{-i tm D})
  //   = e^{i tm D} W exp(i dt w(tm) mu) W^dag e^{-i tm D}
  // with A = W mu W^dag, so each factor is exactly unitary and costs two
  // dense multiplies built from fixed spectral data.
  const Matrix UdW = sdD.eigenvectors.adjoint() * sdA.eigenvectors;
  Matrix V = Matrix::Identity(n, n);
  for (int k = 0; k < steps; ++k) {
    const double tm = t0 + (k + 0.5) * dt;
    const double w = At.weight(tm);
    if (w == 0.0) continue;
    Vector phD = phase_diag(sdD.eigenvalues, tm);
    Matrix E = sdD.eigenvectors * (phD.asDiagonal() * UdW);
    Vector expmu(n);
    for (int i = 0; i < n; ++i) expmu(i) = std::polar(1.0, dt * w * sdA.eigenvalues(i));
    V = V * (E * (expmu.asDiagonal() * E.adjoint()));
  }
  OrderedEvolution out;
  out.V = std::move(V);
  out.t0 = t0;
  out.t1 = t1;
  out.step_count = steps;
  out.unitarity_defect =
      (out.V.adjoint() * out.V - Matrix::Identity(n, n)).operatorNorm();
  if (out.unitarity_defect > 1e-9) {
    throw std::runtime_error("dyson_evolve: unitarity defect above 1e-9");
  }
  return out;
}

namespace {

// V at all grid points of the switching window [-w, 0], same midpoint product.
std::vector<Matrix> dyson_grid(const HermitianOperator& D, const Matrix& A,
                               const SwitchSchedule& schedule, int steps) {
  const int n = D.dim();
  const double w = schedule.window;
  const double dt = w / steps;
  const auto& sdD = D.spectral();
  HermitianOperator Aop(A, 1e-9 * std::max(1.0, A.norm()));
  const auto& sdA = Aop.spectral();
  const Matrix UdW = sdD.eigenvectors.adjoint() * sdA.eigenvectors;

  std::vector<Matrix> Vs(steps + 1);
  Vs[0] = Matrix::Identity(n, n);
  for (int k = 0; k < steps; ++k) {
    const double tm = -w + (k + 0.5) * dt;
    const double hw = schedule.h(tm);
    if (hw == 0.0) {
      Vs[k + 1] = Vs[k];
      continue;
    }
    Vector phD = phase_diag(sdD.eigenvalues, tm);
    Matrix E = sdD.eigenvectors * (phD.asDiagonal() * UdW);
    Vector expmu(n);
    for (int i = 0; i < n; ++i) expmu(i) = std::polar(1.0, dt * hw * sdA.eigenvalues(i));
    Vs[k + 1] = Vs[k] * (E * (expmu.asDiagonal() * E.adjoint()));
  }
  return Vs;
}

}  // namespace

InteractionOperator compute_K(const HermitianOperator& D,
                              const HermitianOperator& Aplus,
                              const SwitchSchedule& schedule, double step) {
  const double w = schedule.window;
  if (!(w > 0.0)) throw std::invalid_argument("compute_K: empty switching window");
  int steps = std::max(2, static_cast<int>(std::ceil(w / step)));
  if (steps % 2 == 1) ++steps;  // composite Simpson wants an even count
  const double dt = w / steps;
  const int n = D.dim();

  const auto Vs = dyson_grid(D, Aplus.matrix(), schedule, steps);
  const auto& sdD = D.spectral();
  const Matrix Atil = sdD.eigenvectors.adjoint() * Aplus.matrix() * sdD.eigenvectors;

  // integrand g(s) = V_s e^{isD} hdot(s) A e^{-isD} V_s^{-1}
  auto integrand = [&](int k) -> Matrix {
    const double s = -w + k * dt;
    const double hd = schedule.hdot(s);
    if (hd == 0.0) return Matrix::Zero(n, n);
    Vector ph = phase_diag(sdD.eigenvalues, s);
    Matrix mid = Atil;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) mid(i, j) *= ph(i) * std::conj(ph(j)) * hd;
    Matrix pos = sdD.eigenvectors * mid * sdD.eigenvectors.adjoint();
    return Vs[k] * pos * Vs[k].adjoint();
  };

  Matrix K = Matrix::Zero(n, n);
  for (int k = 0; k <= steps; ++k) {
    double wgt;
    if (k == 0 || k == steps) {
      wgt = 1.0;
    } else if (k % 2 == 1) {
      wgt = 4.0;
    } else {
      wgt = 2.0;
    }
    K += (wgt * dt / 3.0) * integrand(k);
  }

  const double hdefect = hermiticity_defect(K);
  if (hdefect > 1e-9 * std::max(1.0, K.norm())) {
    throw std::runtime_error("compute_K: integrated K lost hermiticity");
  }
  K = 0.5 * (K + K.adjoint()).eval();

  // dual formula: K = V0 (D + A_+) V0^{-1} - D
  const Matrix& V0 = Vs[steps];
  Matrix dual = V0 * (D.matrix() + Aplus.matrix()) * V0.adjoint() - D.matrix();
  const double gap = (K - dual).operatorNorm();
  // second-order integrator: error estimate ~ (w/steps)^2 per unit of |A|
  const double est = dt * dt * std::max(1.0, Aplus.matrix().operatorNorm() *
                                                 (1.0 + D.matrix().operatorNorm()));
  if (gap > 100.0 * std::max(est, 1e-12)) {
    std::ostringstream os;
    os << "compute_K: quadrature/dual-formula gap " << gap
       << " exceeds 100x estimated integrator error " << est;
    throw std::runtime_error(os.str());
  }

  InteractionOperator out{HermitianOperator(std::move(K), 1e-8), gap, V0};
  return out;
}

Cocycle make_cocycle(const HermitianOperator& D, const HermitianOperator& Aplus,
                     const SwitchSchedule& schedule, double step) {
  auto io = compute_K(D, Aplus, schedule, step);
  return Cocycle{D, std::move(io.K), std::move(io.V0), Aplus};
}

namespace {

Matrix evolution_exp(const HermitianOperator& H, double t) {
  const auto& sd = H.spectral();
  Vector ph = phase_diag(sd.eigenvalues, t);
  return sd.eigenvectors * ph.asDiagonal() * sd.eigenvectors.adjoint();
}

}  // namespace

Matrix cocycle_at(const Cocycle& c, double t) {
  if (t < 0.0) {
    // U_{-s} = e^{-isD} U_s^* e^{isD} with s = -t > 0
    const double s = -t;
    Matrix Us = cocycle_at(c, s);
    return evolution_exp(c.D, -s) * Us.adjoint() * evolution_exp(c.D, s);
  }
  HermitianOperator DA(c.D.matrix() + c.Aplus.matrix(),
                       1e-9 * std::max(1.0, c.D.matrix().norm()));
  return c.V0 * evolution_exp(DA, t) * c.V0.adjoint() * evolution_exp(c.D, -t);
}

Matrix cocycle_via_K(const Cocycle& c, double t) {
  HermitianOperator DK(c.D.matrix() + c.K.matrix(),
                       1e-8 * std::max(1.0, c.D.matrix().norm()));
  return evolution_exp(DK, t) * evolution_exp(c.D, -t);
}

MollerReport moller(const HermitianOperator& D, const HermitianOperator& K,
                    const std::vector<double>& t_grid,
                    const std::vector<Vector>& probes, double beta) {
  for (size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1]) || !(t_grid[0] >= 0.0))
      throw std::invalid_argument("moller: t_grid must be positive increasing");
  }
  const int n = D.dim();
  HermitianOperator H(D.matrix() + K.matrix(), 1e-8 * std::max(1.0, D.matrix().norm()));
  const Matrix FD = fermi_factor(D, beta, FermiSign::minus).matrix();
  const Matrix FH = fermi_factor(H, beta, FermiSign::minus).matrix();

  const auto& sdD = D.spectral();
  const auto& sdH = H.spectral();
  const Matrix overlap = sdH.eigenvectors.adjoint() * sdD.eigenvectors;

  MollerReport rep;
  rep.t_grid = t_grid;
  rep.increment_curves.resize(probes.size());
  rep.intertwining_residuals.resize(probes.size());
  rep.cesaro_residuals.resize(probes.size());
  rep.isometry_defects.assign(probes.size(), 0.0);

  std::vector<Matrix> omegas(t_grid.size());
  for (size_t ti = 0; ti < t_grid.size(); ++ti) {
    omegas[ti] = evolution_exp(H, t_grid[ti]) * evolution_exp(D, -t_grid[ti]);
  }

  for (size_t pi = 0; pi < probes.size(); ++pi) {
    const Vector& f = probes[pi];
    if (f.size() != n) throw std::invalid_argument("moller: probe dimension mismatch");
    for (size_t ti = 0; ti < t_grid.size(); ++ti) {
      const Vector of = omegas[ti] * f;
      rep.isometry_defects[pi] =
          std::max(rep.isometry_defects[pi], std::abs(of.norm() - f.norm()));
      if (ti + 1 < t_grid.size()) {
        rep.increment_curves[pi].push_back((omegas[ti + 1] * f - of).norm());
      }
      rep.intertwining_residuals[pi].push_back((FH * of - omegas[ti] * (FD * f)).norm());

      // Cesaro mean of Omega(t) matrix elements over [0, T]:
      // <e_a^H, Omega(t) e_b^D> = overlap(a,b) e^{it(lam_a^H - lam_b^D)},
      // averaged via phi(x) = (e^{ix}-1)/(ix).
      const double T = t_grid[ti];
      Matrix avg = overlap;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double x = (sdH.eigenvalues(a) - sdD.eigenvalues(b)) * T;
          Complex phi;
          if (std::abs(x) < 1e-8) {
            phi = Complex(1.0 - x * x / 6.0, x / 2.0);
          } else {
            phi = (std::polar(1.0, x) - 1.0) / Complex(0.0, x);
          }
          avg(a, b) *= phi;
        }
      }
      // residual of the averaged intertwining in the mixed eigenbases
      Matrix lhs = avg;  // f(H) acts by fermi(lam_a) on the left
      Matrix rhs = avg;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          lhs(a, b) *= fermi_scalar(beta * sdH.eigenvalues(a));
          rhs(a, b) *= fermi_scalar(beta * sdD.eigenvalues(b));
        }
      const Vector fD = sdD.eigenvectors.adjoint() * f;
      rep.cesaro_residuals[pi].push_back(((lhs - rhs) * fD).norm());
    }
  }
  return rep;
}

DecayCurve cook_decay(const HermitianOperator& H, const Matrix& K,
                      const Vector& f, const std::vector<double>& t_grid) {
  if (std::abs(f.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("cook_decay: probe must be normalized");
  DecayCurve out;
  out.t_grid = t_grid;
  const auto& sd = H.spectral();
  const Vector fH = sd.eigenvectors.adjoint() * f;
  for (double t : t_grid) {
    Vector evolved = fH;
    for (int i = 0; i < evolved.size(); ++i)
      evolved(i) *= std::polar(1.0, t * sd.eigenvalues(i));
    const Vector back = sd.eigenvectors * evolved;
    out.values.push_back((K * back).norm());
  }
  // tail fit over the upper half (only over strictly positive data)
  std::vector<double> xs, ys;
  for (size_t i = t_grid.size() / 2; i < t_grid.size(); ++i) {
    if (out.values[i] > 0.0 && t_grid[i] > 0.0) {
      xs.push_back(t_grid[i]);
      ys.push_back(out.values[i]);
    }
  }
  if (xs.size() >= 2) {
    const auto fit = loglog_fit(xs, ys);
    out.tail_slope = fit.slope;
    out.tail_r_squared = fit.r_squared;
  }
  return out;
}

}  // namespace fkms
