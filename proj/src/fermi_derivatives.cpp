#include "fermi_derivatives.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

namespace {

HermitianOperator family_operator(const FermiFamily& fam, double lambda) {
  return HermitianOperator(
      fam.D0.matrix() + lambda * fam.K,
      1e-9 * std::max(1.0, fam.D0.matrix().norm() + fam.K.norm()));
}

// diagonal of A(u) in the eigenbasis, u already reduced to [0,1)
RealVector a_diag_reduced(const RealVector& lam, double u) {
  RealVector v(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    const double d = lam(i);
    v(i) = (d >= 0.0) ? std::exp(-u * d) * fermi_scalar(d)
                      : std::exp((1.0 - u) * d) * fermi_scalar(-d);
  }
  return v;
}

// antiperiodic extension: sign (-1)^[u] and reduced argument
RealVector a_diag(const RealVector& lam, double u) {
  const double fl = std::floor(u);
  RealVector v = a_diag_reduced(lam, u - fl);
  const long long k = static_cast<long long>(fl);
  if (k % 2 != 0) v = -v;
  return v;
}

}  // namespace

Matrix a_of_u(const FermiFamily& fam, double u) {
  const auto D = family_operator(fam, fam.lambda);
  const auto& sd = D.spectral();
  return sd.eigenvectors * a_diag(sd.eigenvalues, u).asDiagonal() *
         sd.eigenvectors.adjoint();
}

Matrix dA_dlambda(const FermiFamily& fam, double u, int n, int quad_points) {
  if (n < 1 || n > 3)
    throw std::invalid_argument("dA_dlambda: n must be 1..3");
  const auto D = family_operator(fam, fam.lambda);
  const auto& sd = D.spectral();
  const RealVector& lam = sd.eigenvalues;
  const Matrix Kt = sd.eigenvectors.adjoint() * fam.K * sd.eigenvectors;
  const int d = D.dim();
  const auto& gl = gauss_legendre(quad_points);

  Matrix acc = Matrix::Zero(d, d);

  // Iterate x_1 .. x_n; partial = Kt diag(A(x_1)) ... Kt diag(A(x_j)).
  // The head diag(A(u - sigma)) is applied at the leaves as a row scaling;
  // the last axis is fused so each (n-1)-level node costs one multiply.
  auto splits = [&](double sigma) {
    // breakpoint of x where u - sigma - x crosses an integer
    const double frac = (u - sigma) - std::floor(u - sigma);
    return frac;
  };

  std::function<void(int, double, double, const Matrix&)> descend =
      [&](int level, double sigma, double wprod, const Matrix& partial) {
        const double b = splits(sigma);
        const double panels[2][2] = {{0.0, b}, {b, 1.0}};
        if (level == n) {
          const Matrix P = partial * Kt;  // one multiply, then diag sandwiches
          for (const auto& pan : panels) {
            const double lo = pan[0], hi = pan[1];
            if (hi - lo <= 1e-15) continue;
            for (size_t q = 0; q < gl.nodes.size(); ++q) {
              const double x = lo + (hi - lo) * gl.nodes[q];
              const double w = wprod * (hi - lo) * gl.weights[q];
              const RealVector head = a_diag(lam, u - sigma - x);
              const RealVector tail = a_diag_reduced(lam, x);
              for (int jj = 0; jj < d; ++jj) {
                const double cj = w * tail(jj);
                for (int ii = 0; ii < d; ++ii) acc(ii, jj) += head(ii) * cj * P(ii, jj);
              }
            }
          }
          return;
        }
        for (const auto& pan : panels) {
          const double lo = pan[0], hi = pan[1];
          if (hi - lo <= 1e-15) continue;
          for (size_t q = 0; q < gl.nodes.size(); ++q) {
            const double x = lo + (hi - lo) * gl.nodes[q];
            const double w = wprod * (hi - lo) * gl.weights[q];
            Matrix next = partial * (Kt * a_diag_reduced(lam, x).asDiagonal());
            descend(level + 1, sigma + x, w, next);
          }
        }
      };

  descend(1, 0.0, 1.0, Matrix::Identity(d, d));

  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  Matrix out = sign * fact * (sd.eigenvectors * acc * sd.eigenvectors.adjoint());
  return out;
}

DerivativeConsistency derivative_consistency(const FermiFamily& fam, double u,
                                             int n_max, int quad_points) {
  if (n_max < 1 || n_max > 3)
    throw std::invalid_argument("derivative_consistency: n_max must be 1..3");
  DerivativeConsistency rep;

  auto a_at = [&](double lambda) {
    FermiFamily shifted = fam;
    shifted.lambda = lambda;
    return a_of_u(shifted, u);
  };

  const double l0 = fam.lambda;
  for (int n = 1; n <= n_max; ++n) {
    const Matrix formula = dA_dlambda(fam, u, n, quad_points);
    Matrix fd;
    if (n == 1) {
      const double h = 1e-5;
      fd = (a_at(l0 + h) - a_at(l0 - h)) / (2.0 * h);
    } else if (n == 2) {
      const double h = 1e-4;
      fd = (a_at(l0 + h) - 2.0 * a_at(l0) + a_at(l0 - h)) / (h * h);
    } else {
      const double h = 5e-3;
      fd = (a_at(l0 + 2 * h) - 2.0 * a_at(l0 + h) + 2.0 * a_at(l0 - h) -
            a_at(l0 - 2 * h)) /
           (2.0 * h * h * h);
    }
    rep.finite_diff_rel_errors.push_back(
        (formula - fd).operatorNorm() / std::max(formula.operatorNorm(), 1e-300));
  }

  // Taylor remainder around the family's lambda
  std::vector<Matrix> derivs;
  for (int n = 1; n <= n_max; ++n) derivs.push_back(dA_dlambda(fam, u, n, quad_points));
  const Matrix base = a_at(l0);
  for (double dl : {0.05, 0.1, 0.2}) {
    Matrix pred = base;
    double fact = 1.0;
    for (int n = 1; n <= n_max; ++n) {
      fact *= n;
      pred += std::pow(dl, n) / fact * derivs[n - 1];
    }
    rep.taylor_lambdas.push_back(dl);
    rep.taylor_remainders.push_back((a_at(l0 + dl) - pred).operatorNorm());
  }
  const auto fit = loglog_fit(rep.taylor_lambdas, rep.taylor_remainders);
  rep.taylor_slope = fit.slope;
  rep.taylor_r_squared = fit.r_squared;
  return rep;
}

}  // namespace fkms
