// Gauss-Legendre nodes, Halton sequences and log-log power-law fits.
#pragma once

#include <vector>

namespace fkms {

struct GaussLegendre {
  std::vector<double> nodes;    // on (0,1)
  std::vector<double> weights;  // sum to 1
};

// Cached Gauss-Legendre rule mapped to (0,1).
const GaussLegendre& gauss_legendre(int n);

// Halton sequence point i (1-based internally) in dimension d, prime bases.
std::vector<double> halton_point(long long index, int dim);

struct PowerLawFit {
  double slope;
  double intercept;
  double r_squared;
};

// Least squares on (log x, log y); y entries must be positive.
PowerLawFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

PowerLawFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fkms
