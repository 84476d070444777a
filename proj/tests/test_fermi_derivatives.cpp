#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fermi_derivatives.hpp"
#include "kms.hpp"
#include "quadrature.hpp"
#include "test_util.hpp"

using namespace fkms;

namespace {

FermiFamily random_family(std::uint64_t seed, int dim, double dnorm,
                          double knorm, double lambda = 0.0) {
  testutil::Rng rng(seed);
  FermiFamily fam{HermitianOperator(rng.hermitian_opnorm(dim, dnorm)),
                  rng.hermitian_opnorm(dim, knorm), lambda};
  return fam;
}

}  // namespace

TEST_CASE("a_of_u: boundary values and antiperiodicity") {
  const auto fam = random_family(1, 8, 2.5, 1.0);
  const Matrix a0 = a_of_u(fam, 0.0);
  const Matrix fm = fermi_factor(fam.D0, 1.0, FermiSign::minus).matrix();
  CHECK((a0 - fm).operatorNorm() <= 1e-13);

  for (double u : {0.15, 0.6, 0.95}) {
    CHECK((a_of_u(fam, u + 1.0) + a_of_u(fam, u)).operatorNorm() <= 1e-14);
    CHECK((a_of_u(fam, u - 1.0) + a_of_u(fam, u)).operatorNorm() <= 1e-14);
  }

  // scalar D = 0: A(u) = 1/2 on [0,1)
  FermiFamily scalar{HermitianOperator(Matrix::Zero(1, 1)), Matrix::Zero(1, 1),
                     0.0};
  for (double u : {0.0, 0.3, 0.99}) {
    CHECK(a_of_u(scalar, u)(0, 0).real() == doctest::Approx(0.5));
  }
}

TEST_CASE("a_of_u is the stable inverse of e^{uD} + e^{(u-1)D}") {
  const auto fam = random_family(2, 6, 2.0, 0.8, 0.4);
  HermitianOperator D(fam.D0.matrix() + fam.lambda * fam.K, 1e-9);
  for (double u : {0.1, 0.5, 0.9}) {
    const Matrix direct =
        (D.apply_function([u](double x) { return std::exp(u * x); }, "exp") +
         D.apply_function([u](double x) { return std::exp((u - 1.0) * x); },
                          "exp"))
            .inverse();
    CHECK((a_of_u(fam, u) - direct).operatorNorm() <= 1e-12);
  }
}

TEST_CASE("dA_dlambda: zero perturbation and hermiticity") {
  auto fam = random_family(3, 6, 2.0, 0.0);
  fam.K.setZero();
  for (int n : {1, 2}) {
    CHECK(dA_dlambda(fam, 0.3, n, 10).operatorNorm() <= 1e-14);
  }
  const auto fam2 = random_family(4, 6, 2.0, 1.0);
  const Matrix d1 = dA_dlambda(fam2, 0.4, 1, 12);
  CHECK(hermiticity_defect(d1) <= 1e-9 * std::max(1.0, d1.operatorNorm()));
}

TEST_CASE("dA_dlambda: scalar commuting oracle at n = 1") {
  // D = (d), K = (k): derivative of (e^{u(d+lk)} + e^{(u-1)(d+lk)})^{-1} at l=0
  Matrix D(1, 1), K(1, 1);
  D(0, 0) = 0.8;
  K(0, 0) = 0.6;
  FermiFamily fam{HermitianOperator(D), K, 0.0};
  const double u = 0.35;
  const Matrix formula = dA_dlambda(fam, u, 1, 16);
  auto a = [&](double l) {
    const double x = 0.8 + l * 0.6;
    return 1.0 / (std::exp(u * x) + std::exp((u - 1.0) * x));
  };
  const double fd = (a(1e-6) - a(-1e-6)) / 2e-6;
  CHECK(formula(0, 0).real() == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("derivative_consistency: finite differences and Taylor slopes") {
  const auto fam = random_family(5, 8, 2.0, 1.0);
  const auto rep = derivative_consistency(fam, 0.3, 2, 12);
  REQUIRE(rep.finite_diff_rel_errors.size() == 2);
  CHECK(rep.finite_diff_rel_errors[0] <= 1e-5);
  CHECK(rep.finite_diff_rel_errors[1] <= 1e-5);
  CHECK(rep.taylor_slope == doctest::Approx(3.0).epsilon(0.1));
  CHECK(rep.taylor_r_squared >= 0.99);
}

TEST_CASE("derivative_consistency: n = 3 stays close to finite differences") {
  const auto fam = random_family(6, 6, 1.5, 0.8);
  const auto rep = derivative_consistency(fam, 0.45, 3, 10);
  CHECK(rep.finite_diff_rel_errors[2] <= 1e-3);
  CHECK(rep.taylor_slope == doctest::Approx(4.0).epsilon(0.12));
}

TEST_CASE("taylor check is exact at lambda displacement 0") {
  const auto fam = random_family(7, 5, 1.5, 0.7, 0.2);
  const Matrix base = a_of_u(fam, 0.3);
  // reconstruct with zero displacement: remainder must vanish
  CHECK((a_of_u(fam, 0.3) - base).operatorNorm() == 0.0);
}

TEST_CASE("cross-module: series terms are the Taylor coefficients") {
  testutil::Rng rng(8);
  const double beta = 1.3;
  HermitianOperator D(rng.hermitian_opnorm(7, 2.0));
  HermitianOperator K(rng.hermitian_opnorm(7, 0.35 / beta));
  KmsSpec spec{beta, D, K};
  FermiFamily fam{HermitianOperator(beta * D.matrix(), 1e-9),
                  beta * K.matrix(), 0.0};
  for (int n : {1, 2, 3}) {
    const Matrix term = t_series_term(spec, beta, n, 12);
    Matrix deriv = dA_dlambda(fam, 0.0, n, 12);
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    deriv /= fact;
    CHECK((term - deriv).operatorNorm() <= 1e-9);
  }
}
