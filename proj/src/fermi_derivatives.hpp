// Perturbed Fermi-factor family A(u) = (e^{uD} + e^{(u-1)D})^{-1} with
// D = D0 + lambda K, extended antiperiodically by A(u) = (-1)^{[u]} A(u-[u]),
// and the closed-form n-th lambda-derivative
//   d^n A(u) = (-1)^n n! int_{(0,1)^n} A(u - sum x_i) prod_i K A(x_i) dx.
// Beta is absorbed into D here; the map from thermal conventions is
// D -> beta D, K -> beta K, u -> u / beta.
#pragma once

#include <vector>

#include "linop.hpp"

namespace fkms {

struct FermiFamily {
  HermitianOperator D0;
  Matrix K;
  double lambda = 0.0;
};

// Stable evaluation e^{-u'D}(1+e^{-D})^{-1} on the reduced argument.
Matrix a_of_u(const FermiFamily& fam, double u);

// n-th lambda-derivative at the family's current lambda, n <= 3. Iterated
// per-axis Gauss-Legendre; every axis splits where the reduced argument of
// A(u - sum x) crosses an integer (the antiperiodic sign flips there).
Matrix dA_dlambda(const FermiFamily& fam, double u, int n, int quad_points);

struct DerivativeConsistency {
  std::vector<double> finite_diff_rel_errors;  // n = 1..n_max
  std::vector<double> taylor_lambdas;
  std::vector<double> taylor_remainders;
  double taylor_slope = 0.0;       // log-log fit, expect n_max + 1
  double taylor_r_squared = 0.0;
};

DerivativeConsistency derivative_consistency(const FermiFamily& fam, double u,
                                             int n_max, int quad_points = 12);

}  // namespace fkms
