#include "linop.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fkms {

double hermiticity_defect(const Matrix& M) {
  return (M - M.adjoint()).operatorNorm();
}

double log1p_exp_neg(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

double fermi_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

HermitianOperator::HermitianOperator(Matrix entries, double hermiticity_tol)
    : mat_(std::move(entries)), tol_(hermiticity_tol) {
  if (mat_.rows() < 1 || mat_.rows() != mat_.cols()) {
    throw std::invalid_argument("HermitianOperator: matrix must be square with dim >= 1");
  }
  const double defect = hermiticity_defect(mat_);
  if (defect > tol_) {
    std::ostringstream os;
    os << "HermitianOperator: asymmetry " << defect << " exceeds tolerance " << tol_;
    throw std::invalid_argument(os.str());
  }
  // Work with the exact hermitian part so downstream identities hold to rounding.
  mat_ = 0.5 * (mat_ + mat_.adjoint()).eval();
}

namespace {

// Deterministic ordering: ascending eigenvalues, each column's first
// significant component rotated real positive, degenerate groups sorted
// lexicographically by (re, im) of the phase-fixed columns.
void canonicalize(SpectralDecomposition& sd) {
  const int n = static_cast<int>(sd.eigenvalues.size());
  for (int j = 0; j < n; ++j) {
    auto col = sd.eigenvectors.col(j);
    int lead = -1;
    for (int i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-8) {
        lead = i;
        break;
      }
    }
    if (lead < 0) continue;
    Complex phase = col(lead) / std::abs(col(lead));
    col /= phase;
  }
  const double spread = (n > 1) ? (sd.eigenvalues(n - 1) - sd.eigenvalues(0)) : 0.0;
  const double tie_tol = 1e-12 * std::max(spread, 1.0);
  auto col_less = [&](int a, int b) {
    for (int i = 0; i < n; ++i) {
      const Complex ca = sd.eigenvectors(i, a), cb = sd.eigenvectors(i, b);
      if (std::abs(ca.real() - cb.real()) > 1e-12) return ca.real() < cb.real();
      if (std::abs(ca.imag() - cb.imag()) > 1e-12) return ca.imag() < cb.imag();
    }
    return false;
  };
  int start = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && sd.eigenvalues(stop) - sd.eigenvalues(start) <= tie_tol) ++stop;
    if (stop - start > 1) {
      std::vector<int> idx(stop - start);
      for (int i = 0; i < stop - start; ++i) idx[i] = start + i;
      std::sort(idx.begin(), idx.end(), col_less);
      Matrix block(n, stop - start);
      for (int i = 0; i < stop - start; ++i) block.col(i) = sd.eigenvectors.col(idx[i]);
      sd.eigenvectors.middleCols(start, stop - start) = block;
    }
    start = stop;
  }
}

}  // namespace

const SpectralDecomposition& HermitianOperator::spectral() const {
  auto cached = std::atomic_load(&cache_);
  if (!cached) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(mat_);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("HermitianOperator: eigensolver failed");
    }
    auto sd = std::make_shared<SpectralDecomposition>();
    sd->eigenvalues = solver.eigenvalues();
    sd->eigenvectors = solver.eigenvectors();
    canonicalize(*sd);
    std::atomic_store(&cache_, std::shared_ptr<const SpectralDecomposition>(sd));
    cached = std::atomic_load(&cache_);
  }
  return *cached;
}

SpectralDecomposition spectral_decompose(const HermitianOperator& M) {
  return M.spectral();
}

Matrix HermitianOperator::apply_function(const std::function<double(double)>& f,
                                         const std::string& fname) const {
  const auto& sd = spectral();
  const int n = dim();
  RealVector fl(n);
  for (int i = 0; i < n; ++i) {
    const double v = f(sd.eigenvalues(i));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "matrix_function: " << fname << " is not finite at eigenvalue "
         << sd.eigenvalues(i);
      throw std::domain_error(os.str());
    }
    fl(i) = v;
  }
  return sd.eigenvectors * fl.asDiagonal() * sd.eigenvectors.adjoint();
}

HermitianOperator matrix_function(const HermitianOperator& M,
                                  const std::function<double(double)>& f,
                                  const std::string& fname) {
  Matrix R = M.apply_function(f, fname);
  const double scale = std::max(1.0, R.norm());
  return HermitianOperator(std::move(R), 1e-12 * M.dim() * scale);
}

Matrix matrix_function_frechet(const HermitianOperator& M,
                               const std::function<double(double)>& f,
                               const Matrix& direction,
                               const std::function<double(double)>& fprime) {
  if (direction.rows() != M.dim() || direction.cols() != M.dim()) {
    throw std::invalid_argument("matrix_function_frechet: dimension mismatch");
  }
  const auto& sd = M.spectral();
  const int n = M.dim();
  const double spread =
      std::max(sd.eigenvalues(n - 1) - sd.eigenvalues(0), 1e-300);
  const double degen = 1e-8 * spread;
  auto deriv = [&](double x) {
    if (fprime) return fprime(x);
    const double h = 1e-6 * std::max(spread, 1.0);
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  RealVector fl(n);
  for (int i = 0; i < n; ++i) fl(i) = f(sd.eigenvalues(i));
  Matrix X = sd.eigenvectors.adjoint() * direction * sd.eigenvectors;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double li = sd.eigenvalues(i), lj = sd.eigenvalues(j);
      double dd;
      if (std::abs(li - lj) < degen) {
        dd = deriv(0.5 * (li + lj));
      } else {
        dd = (fl(i) - fl(j)) / (li - lj);
      }
      X(i, j) *= dd;
    }
  }
  return sd.eigenvectors * X * sd.eigenvectors.adjoint();
}

HermitianOperator fermi_factor(const HermitianOperator& M, double beta,
                               FermiSign sign) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("fermi_factor: beta must be positive");
  }
  if (sign == FermiSign::minus) {
    // F_- = (1 + e^{-beta x})^{-1}
    return matrix_function(M, [beta](double x) { return fermi_scalar(beta * x); },
                           "fermi_minus");
  }
  // F_+ = -(1 + e^{beta x})^{-1}
  return matrix_function(M, [beta](double x) { return -fermi_scalar(-beta * x); },
                         "fermi_plus");
}

SpectralProjectors spectral_projectors(const HermitianOperator& M) {
  const auto& sd = M.spectral();
  const int n = M.dim();
  RealVector ind(n);
  for (int i = 0; i < n; ++i) ind(i) = sd.eigenvalues(i) > 0.0 ? 1.0 : 0.0;
  SpectralProjectors out;
  out.P = sd.eigenvectors * ind.asDiagonal() * sd.eigenvectors.adjoint();
  out.Q = Matrix::Identity(n, n) - out.P;
  return out;
}

NormReport norms(const Matrix& M) {
  NormReport r;
  if (M.size() == 0) {
    r.op_norm = r.hs_norm = r.trace_norm = 0.0;
    r.trace = 0.0;
    return r;
  }
  Eigen::BDCSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  r.op_norm = sv.size() ? sv(0) : 0.0;
  r.hs_norm = M.norm();
  r.trace_norm = sv.sum();
  r.trace = M.trace();
  return r;
}

Covariance::Covariance(HermitianOperator op, double tol) : op_(std::move(op)) {
  const auto& ev = op_.spectral().eigenvalues;
  const int n = op_.dim();
  if (ev(0) < -tol || ev(n - 1) > 1.0 + tol) {
    std::ostringstream os;
    os << "Covariance: spectrum [" << ev(0) << ", " << ev(n - 1)
       << "] outside [0,1] beyond tolerance " << tol;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace fkms
