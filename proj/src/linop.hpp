// Spectral calculus on dense self-adjoint operators: matrix functions,
// Daleckii-Krein directional derivatives, spectral projectors, Fermi factors
// and the usual operator norms. Everything is dense complex double; target
// dimensions are a few thousand at most.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <string>

namespace fkms {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct SpectralDecomposition {
  RealVector eigenvalues;  // ascending, deterministic order
  Matrix eigenvectors;     // unitary, column i belongs to eigenvalues[i]
};

// Dense self-adjoint operator with cached spectral data. The cache is shared
// between copies; concurrent first access may duplicate the solve but both
// results are identical.
class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix entries, double hermiticity_tol = 1e-10);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& matrix() const { return mat_; }
  double hermiticity_tol() const { return tol_; }

  const SpectralDecomposition& spectral() const;

  // f applied on the spectrum: U f(Lambda) U^dagger. Throws std::domain_error
  // naming the eigenvalue if f is non-finite there.
  Matrix apply_function(const std::function<double(double)>& f,
                        const std::string& fname = "f") const;

 private:
  Matrix mat_;
  double tol_;
  mutable std::shared_ptr<const SpectralDecomposition> cache_;
};

// Quasi-free state one-particle operator, 0 <= T <= 1 up to tol.
class Covariance {
 public:
  explicit Covariance(HermitianOperator op, double tol = 1e-10);
  const HermitianOperator& op() const { return op_; }
  int dim() const { return op_.dim(); }
  const Matrix& matrix() const { return op_.matrix(); }

 private:
  HermitianOperator op_;
};

enum class FermiSign { plus, minus };

struct NormReport {
  double op_norm;
  double hs_norm;
  double trace_norm;
  Complex trace;
};

SpectralDecomposition spectral_decompose(const HermitianOperator& M);

HermitianOperator matrix_function(const HermitianOperator& M,
                                  const std::function<double(double)>& f,
                                  const std::string& fname = "f");

// First divided-difference (Daleckii-Krein) derivative of f at M in the given
// direction. Near-degenerate pairs (gap < 1e-8 * spectral spread) use fprime;
// if fprime is absent it is taken by central differences of f.
Matrix matrix_function_frechet(const HermitianOperator& M,
                               const std::function<double(double)>& f,
                               const Matrix& direction,
                               const std::function<double(double)>& fprime = nullptr);

// F_{+-} = -+ (1 + e^{+- beta M})^{-1}; F_- = 1 + F_+ and F_- is a covariance.
HermitianOperator fermi_factor(const HermitianOperator& M, double beta,
                               FermiSign sign);

// P on eigenvalues > 0, Q = 1 - P (zero modes go to Q).
struct SpectralProjectors {
  Matrix P;
  Matrix Q;
};
SpectralProjectors spectral_projectors(const HermitianOperator& M);

NormReport norms(const Matrix& M);

// Stable scalar kernels used all over: log(1+e^{-x}) and the Fermi function
// 1/(1+e^{-x}) without overflow for large |x|.
double log1p_exp_neg(double x);   // log(1 + e^{-x})
double fermi_scalar(double x);    // 1/(1 + e^{-x})

double hermiticity_defect(const Matrix& M);

}  // namespace fkms
