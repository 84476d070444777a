#include "ness.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fkms {

namespace {

HermitianOperator sum_op(const HermitianOperator& D, const HermitianOperator& K) {
  return HermitianOperator(
      D.matrix() + K.matrix(),
      1e-9 * std::max(1.0, D.matrix().norm() + K.matrix().norm()));
}

// clusters of indices whose eigenvalues are closer than tol, input ascending
std::vector<std::pair<int, int>> eigen_clusters(const RealVector& ev, double tol) {
  std::vector<std::pair<int, int>> out;
  int start = 0;
  const int n = static_cast<int>(ev.size());
  while (start < n) {
    int stop = start + 1;
    while (stop < n && ev(stop) - ev(stop - 1) <= tol) ++stop;
    out.emplace_back(start, stop);
    start = stop;
  }
  return out;
}

}  // namespace

GapSpectrum bound_states(const HermitianOperator& D, const HermitianOperator& K,
                         double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("bound_states: mass must be positive");
  const auto H = sum_op(D, K);
  const auto& sd = H.spectral();
  const int n = H.dim();
  const double edge = mass - 1e-9;

  GapSpectrum out;
  Matrix Pbound = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(sd.eigenvalues(i)) < edge) {
      out.gap_eigenvalues.push_back(sd.eigenvalues(i));
      out.gap_eigenvectors.push_back(sd.eigenvectors.col(i));
      Pbound += sd.eigenvectors.col(i) * sd.eigenvectors.col(i).adjoint();
    }
  }
  out.quasi_continuum_projector = Matrix::Identity(n, n) - Pbound;
  const double spread =
      std::max(sd.eigenvalues(n - 1) - sd.eigenvalues(0), 1e-300);
  for (size_t a = 1; a < out.gap_eigenvalues.size(); ++a) {
    if (out.gap_eigenvalues[a] - out.gap_eigenvalues[a - 1] < 1e-10 * spread) {
      out.degenerate_gap = true;
    }
  }
  return out;
}

Covariance ergodic_covariance(const HermitianOperator& D,
                              const HermitianOperator& K, double beta) {
  const auto H = sum_op(D, K);
  const auto& sd = H.spectral();
  const int n = H.dim();
  const double spread =
      std::max(sd.eigenvalues(n - 1) - sd.eigenvalues(0), 1e-300);
  const auto clusters = eigen_clusters(sd.eigenvalues, 1e-10 * spread);

  const Matrix FD = fermi_factor(D, beta, FermiSign::minus).matrix();
  const Matrix Ft = sd.eigenvectors.adjoint() * FD * sd.eigenvectors;
  Matrix dephased = Matrix::Zero(n, n);
  for (const auto& [a, b] : clusters) {
    dephased.block(a, a, b - a, b - a) = Ft.block(a, a, b - a, b - a);
  }
  Matrix back = sd.eigenvectors * dephased * sd.eigenvectors.adjoint();
  return Covariance(HermitianOperator(std::move(back), 1e-9 * n));
}

std::vector<BoundStateDatum> bound_state_data(const GapSpectrum& gap,
                                              const HermitianOperator& D,
                                              double beta) {
  const Matrix FD = fermi_factor(D, beta, FermiSign::minus).matrix();
  std::vector<BoundStateDatum> out;
  for (size_t j = 0; j < gap.gap_eigenvalues.size(); ++j) {
    BoundStateDatum b;
    b.s = gap.gap_eigenvalues[j];
    const Vector& phi = gap.gap_eigenvectors[j];
    b.occupation = phi.dot(FD * phi).real();
    // c = (1+e^{-beta d})^{-1}  =>  d = log(c/(1-c))/beta
    b.d = std::log(b.occupation / (1.0 - b.occupation)) / beta;
    b.k = b.d - b.s;
    out.push_back(b);
  }
  return out;
}

Covariance ness_ideal_covariance(const GapSpectrum& gap,
                                 const HermitianOperator& D,
                                 const HermitianOperator& K, double beta) {
  if (gap.degenerate_gap) {
    throw std::invalid_argument(
        "ness_ideal_covariance: degenerate gap eigenvalue; the construction "
        "assumes nondegenerate bound states");
  }
  const auto H = sum_op(D, K);
  const int n = H.dim();
  const Matrix FH = fermi_factor(H, beta, FermiSign::minus).matrix();
  const Matrix& Pqc = gap.quasi_continuum_projector;
  Matrix T = Pqc * FH * Pqc;
  const Matrix FD = fermi_factor(D, beta, FermiSign::minus).matrix();
  for (const auto& phi : gap.gap_eigenvectors) {
    const double occ = phi.dot(FD * phi).real();
    T += occ * (phi * phi.adjoint());
  }
  return Covariance(HermitianOperator(std::move(T), 1e-9 * n));
}

double ness_vs_ergodic_gap(const HermitianOperator& D, const HermitianOperator& K,
                           double beta, double mass) {
  const auto gap = bound_states(D, K, mass);
  const auto erg = ergodic_covariance(D, K, beta);
  const auto ideal = ness_ideal_covariance(gap, D, K, beta);
  const Matrix& Pqc = gap.quasi_continuum_projector;
  return (Pqc * (erg.matrix() - ideal.matrix()) * Pqc).operatorNorm();
}

ReturnProbeReport return_to_equilibrium_probe(const HermitianOperator& D,
                                              const HermitianOperator& K,
                                              double beta,
                                              const std::vector<Vector>& probes,
                                              const std::vector<double>& horizons,
                                              double mass) {
  for (const auto& f : probes) {
    if (std::abs(f.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("return_to_equilibrium_probe: probes must be normalized");
  }
  const auto H = sum_op(D, K);
  const auto& sd = H.spectral();
  const int n = H.dim();
  const Matrix FD = fermi_factor(D, beta, FermiSign::minus).matrix();
  const Matrix FH = fermi_factor(H, beta, FermiSign::minus).matrix();
  const Matrix Ft = sd.eigenvectors.adjoint() * FD * sd.eigenvectors;

  ReturnProbeReport rep;
  rep.horizons = horizons;
  rep.cesaro_gaps.resize(probes.size() * probes.size());

  for (double T : horizons) {
    // finite-horizon Cesaro mean of e^{itH} F_-(D) e^{-itH} in the H basis:
    // entries Ft(a,b) phi((lam_a - lam_b) T), phi(x) = (e^{ix}-1)/(ix)
    Matrix avg = Ft;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double x = (sd.eigenvalues(a) - sd.eigenvalues(b)) * T;
        Complex phi;
        if (std::abs(x) < 1e-8) {
          phi = Complex(1.0 - x * x / 6.0, x / 2.0);
        } else {
          phi = (std::polar(1.0, x) - 1.0) / Complex(0.0, x);
        }
        avg(a, b) *= phi;
      }
    }
    const Matrix diff =
        sd.eigenvectors * avg * sd.eigenvectors.adjoint() - FH;
    for (size_t i = 0; i < probes.size(); ++i) {
      for (size_t j = 0; j < probes.size(); ++j) {
        rep.cesaro_gaps[i * probes.size() + j].push_back(
            std::abs(probes[i].dot(diff * probes[j])));
      }
    }
  }

  const auto gap = bound_states(D, K, mass);
  for (size_t j = 0; j < gap.gap_eigenvalues.size(); ++j) {
    const Vector& phi = gap.gap_eigenvectors[j];
    const double occ = phi.dot(FD * phi).real();
    rep.bound_occupations.push_back(occ);
    rep.bound_mismatches.push_back(
        std::abs(occ - fermi_scalar(beta * gap.gap_eigenvalues[j])));
  }
  return rep;
}

}  // namespace fkms
