#include "entropy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

namespace {

HermitianOperator shifted(const HermitianOperator& D, const Matrix& K, double u) {
  return HermitianOperator(D.matrix() + u * K,
                           1e-9 * std::max(1.0, D.matrix().norm() + K.norm()));
}

// Ftil(M) = (1 + e^{beta M})^{-1} = e^{-beta M} F_-(M)
double ftil_scalar(double beta, double x) { return fermi_scalar(-beta * x); }

}  // namespace

ScalarSeries rel_entropy_series(const KmsSpec& spec, int N, int quad_points) {
  const double c = spec.contraction();
  if (c >= 1.0) {
    std::ostringstream os;
    os << "rel_entropy_series requires beta*|K| < 1; got " << c;
    throw std::invalid_argument(os.str());
  }
  double value = 0.0;
  double est = 0.0;
  for (int n = 1; n <= N; ++n) {
    const Matrix term = t_series_term(spec, spec.beta, n, quad_points);
    const double contrib =
        spec.beta / (n + 1) * (spec.K.matrix() * term).trace().real();
    const Matrix term2 =
        (n <= 4) ? t_series_term(spec, spec.beta, n, std::max(3, quad_points - 3))
                 : t_series_term_qmc(spec, spec.beta, n, 1 << 12);
    const double contrib2 =
        spec.beta / (n + 1) * (spec.K.matrix() * term2).trace().real();
    est += std::abs(contrib - contrib2);
    value += contrib;
  }
  ScalarSeries out;
  out.value = value;
  out.order = N;
  out.truncation_bound = std::pow(c, N + 1) / (1.0 - c);
  out.quadrature_estimate = est;
  return out;
}

double rel_entropy_integral(const KmsSpec& spec, int u_quad) {
  const auto& gl = gauss_legendre(u_quad);
  const double beta = spec.beta;
  const Matrix FD = spec.D.apply_function(
      [beta](double x) { return ftil_scalar(beta, x); }, "fermi_tilde");
  double acc = 0.0;
  for (size_t q = 0; q < gl.nodes.size(); ++q) {
    const auto DuK = shifted(spec.D, spec.K.matrix(), gl.nodes[q]);
    const Matrix FuK = DuK.apply_function(
        [beta](double x) { return ftil_scalar(beta, x); }, "fermi_tilde");
    acc += gl.weights[q] * (spec.K.matrix() * (FD - FuK)).trace().real();
  }
  return beta * acc;
}

double rel_entropy_closed(const KmsSpec& spec) {
  const double beta = spec.beta;
  const auto& sdD = spec.D.spectral();
  const auto DK = shifted(spec.D, spec.K.matrix(), 1.0);
  const auto& sdDK = DK.spectral();

  // Tr(beta K (1+e^{beta D})^{-1}) in the D eigenbasis
  const Matrix Kt = sdD.eigenvectors.adjoint() * spec.K.matrix() * sdD.eigenvectors;
  double first = 0.0;
  for (int i = 0; i < spec.D.dim(); ++i)
    first += beta * Kt(i, i).real() * ftil_scalar(beta, sdD.eigenvalues(i));

  double logs = 0.0;
  for (int i = 0; i < spec.D.dim(); ++i) {
    logs += log1p_exp_neg(beta * sdDK.eigenvalues(i));
    logs -= log1p_exp_neg(beta * sdD.eigenvalues(i));
  }
  return first + logs;
}

double rel_entropy_kl(const Covariance& A, const Covariance& B) {
  if (A.dim() != B.dim())
    throw std::invalid_argument("rel_entropy_kl: dimension mismatch");
  const double margin = 1e-12;
  auto check = [&](const Covariance& C, const char* name) {
    const auto& ev = C.op().spectral().eigenvalues;
    if (ev(0) < margin || ev(ev.size() - 1) > 1.0 - margin) {
      std::ostringstream os;
      os << "rel_entropy_kl: state " << name
         << " has spectrum touching {0,1} within margin (range [" << ev(0)
         << ", " << ev(ev.size() - 1) << "])";
      throw std::domain_error(os.str());
    }
  };
  check(A, "A");
  check(B, "B");
  const Matrix logA = A.op().apply_function([](double a) { return std::log(a); }, "log");
  const Matrix log1A =
      A.op().apply_function([](double a) { return std::log1p(-a); }, "log1p");
  const Matrix logB = B.op().apply_function([](double a) { return std::log(a); }, "log");
  const Matrix log1B =
      B.op().apply_function([](double a) { return std::log1p(-a); }, "log1p");
  const Matrix& Am = A.matrix();
  const Matrix one_minus_A = Matrix::Identity(A.dim(), A.dim()) - Am;
  const double val = (Am * (logA - logB)).trace().real() +
                     (one_minus_A * (log1A - log1B)).trace().real();
  return val;
}

namespace {

// s_kl from spectral data of beta D and beta (D+K); the logs of the
// covariance eigenvalues come from log1p_exp_neg, never from the rounded
// covariance spectrum itself.
double kl_from_generators(const KmsSpec& spec) {
  const double beta = spec.beta;
  const auto& sdD = spec.D.spectral();
  const auto DK = shifted(spec.D, spec.K.matrix(), 1.0);
  const auto& sdH = DK.spectral();
  const int n = spec.D.dim();

  double diag = 0.0;
  for (int i = 0; i < n; ++i) {
    const double bl = beta * sdD.eigenvalues(i);
    const double a = fermi_scalar(bl);
    diag += a * (-log1p_exp_neg(bl)) + (1.0 - a) * (-log1p_exp_neg(-bl));
  }
  const Matrix overlap = sdD.eigenvectors.adjoint() * sdH.eigenvectors;
  double cross = 0.0;
  for (int i = 0; i < n; ++i) {
    const double bl = beta * sdD.eigenvalues(i);
    const double a = fermi_scalar(bl);
    for (int j = 0; j < n; ++j) {
      const double bm = beta * sdH.eigenvalues(j);
      const double w = std::norm(overlap(i, j));
      cross += w * (a * (-log1p_exp_neg(bm)) + (1.0 - a) * (-log1p_exp_neg(-bm)));
    }
  }
  return diag - cross;
}

}  // namespace

EntropyReport entropy_report(const KmsSpec& spec, int N, int quad_points,
                             int u_quad) {
  EntropyReport rep;
  rep.s_series = rel_entropy_series(spec, N, quad_points);
  rep.s_integral = rel_entropy_integral(spec, u_quad);
  rep.s_integral_estimate =
      std::abs(rep.s_integral - rel_entropy_integral(spec, std::max(4, u_quad / 2)));
  rep.s_closed = rel_entropy_closed(spec);
  rep.s_kl = kl_from_generators(spec);
  const std::array<double, 4> vals{rep.s_series.value, rep.s_integral,
                                   rep.s_closed, rep.s_kl};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      rep.agreement_matrix[i][j] = std::abs(vals[i] - vals[j]);
  return rep;
}

std::vector<std::uint64_t> eulerian(int n) {
  if (n < 1 || n > 20)
    throw std::invalid_argument("eulerian: exact arithmetic covers n = 1..20");
  std::vector<std::uint64_t> row{1};  // n = 1
  for (int m = 2; m <= n; ++m) {
    std::vector<std::uint64_t> next(m, 0);
    for (int l = 0; l < m; ++l) {
      const std::uint64_t a = (l < m - 1) ? (l + 1) * row[l] : 0;
      const std::uint64_t b = (l >= 1) ? std::uint64_t(m - l) * row[l - 1] : 0;
      next[l] = a + b;
    }
    row = std::move(next);
  }
  return row;
}

namespace {

// Eulerian rows in double (for series beyond the exact range, n <= 40).
std::vector<std::vector<double>> eulerian_rows_double(int nmax) {
  std::vector<std::vector<double>> rows(nmax + 1);
  rows[1] = {1.0};
  for (int m = 2; m <= nmax; ++m) {
    rows[m].assign(m, 0.0);
    for (int l = 0; l < m; ++l) {
      const double a = (l < m - 1) ? (l + 1) * rows[m - 1][l] : 0.0;
      const double b = (l >= 1) ? double(m - l) * rows[m - 1][l - 1] : 0.0;
      rows[m][l] = a + b;
    }
  }
  return rows;
}

double eulerian_poly(const std::vector<double>& row, double u) {
  // Horner from the top degree
  double acc = 0.0;
  for (int l = static_cast<int>(row.size()) - 1; l >= 0; --l) acc = acc * u + row[l];
  return acc;
}

}  // namespace

GeneratingCheck eulerian_generating_check(double x, double u, int N) {
  const double denom = u - std::exp(x * (u - 1.0));
  if (std::abs(denom) < 1e-6)
    throw std::invalid_argument("eulerian_generating_check: too close to the pole");
  if (N < 1 || N > 40)
    throw std::invalid_argument("eulerian_generating_check: N must be 1..40");
  const auto rows = eulerian_rows_double(N);
  GeneratingCheck out;
  double lhs = 0.0, lhs_int = 0.0, fact = 1.0;
  for (int n = 1; n <= N; ++n) {
    fact *= n;  // n!
    const double An = eulerian_poly(rows[n], u);
    lhs += An * std::pow(x, n) / fact;
    lhs_int += An * std::pow(x, n + 1) / (fact * (n + 1));
  }
  out.lhs = lhs;
  out.rhs = (u - 1.0) / denom - 1.0;
  out.gap = std::abs(out.lhs - out.rhs);
  out.lhs_int = lhs_int;
  const double arg = (1.0 - u) / (1.0 - u * std::exp(x * (1.0 - u)));
  out.rhs_int = -x + std::log(arg) / u;
  out.gap_int = std::abs(out.lhs_int - out.rhs_int);
  return out;
}

double ness_rel_entropy_closed(double beta,
                               const std::vector<BoundStateDatum>& bound_states) {
  double acc = 0.0;
  for (const auto& b : bound_states) {
    acc += beta * b.k * fermi_scalar(-beta * b.s);
    acc += log1p_exp_neg(beta * (b.s + b.k)) - log1p_exp_neg(beta * b.s);
  }
  return acc;
}

double ness_rel_entropy_eulerian(double beta,
                                 const std::vector<BoundStateDatum>& bound_states,
                                 int orders) {
  const auto rows = eulerian_rows_double(orders);
  double acc = 0.0;
  for (const auto& b : bound_states) {
    const double ebs = std::exp(beta * b.s);
    const double x = beta * b.k / (1.0 + ebs);
    const double u = -ebs;
    double fact = 1.0, mode = 0.0;
    for (int n = 1; n <= orders; ++n) {
      fact *= n;
      mode += eulerian_poly(rows[n], u) * std::pow(x, n + 1) / (fact * (n + 1));
    }
    acc += ebs * mode;
  }
  return acc;
}

double ness_partition_identity(double beta,
                               const std::vector<BoundStateDatum>& bound_states) {
  double ddeps = 0.0, logZ1 = 0.0, logZ0 = 0.0;
  for (const auto& b : bound_states) {
    ddeps += -beta * b.k * fermi_scalar(-beta * b.s);  // d/de log Z at e = 0
    logZ1 += log1p_exp_neg(beta * (b.s + b.k));
    logZ0 += log1p_exp_neg(beta * b.s);
  }
  return -ddeps + logZ1 - logZ0;
}

namespace {

struct EvolvedPerturbation {
  Matrix L;    // K - e^{itH} K e^{-itH}
  Matrix Phi;  // dL/dt = -i e^{itH} [D,K] e^{-itH}
};

EvolvedPerturbation evolved_perturbation(const KmsSpec& spec, double t) {
  HermitianOperator H(spec.D.matrix() + spec.K.matrix(),
                      1e-9 * std::max(1.0, spec.D.matrix().norm() + spec.K.matrix().norm()));
  const auto& sd = H.spectral();
  Vector ph(sd.eigenvalues.size());
  for (int i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, t * sd.eigenvalues(i));
  const Matrix E = sd.eigenvectors * ph.asDiagonal() * sd.eigenvectors.adjoint();
  EvolvedPerturbation out;
  out.L = spec.K.matrix() - E * spec.K.matrix() * E.adjoint();
  const Matrix comm = spec.D.matrix() * spec.K.matrix() - spec.K.matrix() * spec.D.matrix();
  out.Phi = Complex(0.0, -1.0) * (E * comm * E.adjoint());
  return out;
}

double entropy_of_perturbation(const KmsSpec& spec, const Matrix& L) {
  KmsSpec ls{spec.beta, spec.D,
             HermitianOperator(L, 1e-8 * std::max(1.0, L.norm()))};
  return rel_entropy_closed(ls);
}

}  // namespace

EntropyProduction entropy_production(const KmsSpec& spec, double t, int u_quad,
                                     double fd_step) {
  const double beta = spec.beta;
  const auto ev = evolved_perturbation(spec, t);

  EntropyProduction out;
  out.t = t;
  out.S_t = entropy_of_perturbation(spec, ev.L);

  // E = Tr( beta Phi int_0^1 [Ftil(D) - Ftil(D+uL)] du )
  //   - Tr( beta L int_0^1 DFtil(D+uL)[u Phi] du )
  const auto& gl = gauss_legendre(u_quad);
  const Matrix FD = spec.D.apply_function(
      [beta](double x) { return ftil_scalar(beta, x); }, "fermi_tilde");
  auto ftil = [beta](double x) { return ftil_scalar(beta, x); };
  auto ftil_prime = [beta](double x) {
    return -beta * fermi_scalar(beta * x) * fermi_scalar(-beta * x);
  };
  double e1 = 0.0, e2 = 0.0;
  for (size_t q = 0; q < gl.nodes.size(); ++q) {
    const double u = gl.nodes[q];
    const auto DuL = shifted(spec.D, ev.L, u);
    const Matrix FuL = DuL.apply_function(ftil, "fermi_tilde");
    e1 += gl.weights[q] * (ev.Phi * (FD - FuL)).trace().real();
    const Matrix dF = matrix_function_frechet(DuL, ftil, Matrix(u * ev.Phi), ftil_prime);
    e2 += gl.weights[q] * (ev.L * dF).trace().real();
  }
  out.E_analytic = beta * (e1 - e2);

  const auto lp = evolved_perturbation(spec, t + fd_step);
  const auto lm = evolved_perturbation(spec, t - fd_step);
  out.E_finite_diff = (entropy_of_perturbation(spec, lp.L) -
                       entropy_of_perturbation(spec, lm.L)) /
                      (2.0 * fd_step);
  return out;
}

EntropyProductionSweep entropy_production_sweep(const KmsSpec& spec, double t_max,
                                                int time_nodes, int u_quad) {
  EntropyProductionSweep sweep;
  // Gauss-Legendre in time gives the integral of E directly
  const auto& gl = gauss_legendre(time_nodes);
  double integral = 0.0;
  for (size_t q = 0; q < gl.nodes.size(); ++q) {
    const double t = t_max * gl.nodes[q];
    const auto ep = entropy_production(spec, t, u_quad);
    sweep.t_grid.push_back(t);
    sweep.S.push_back(ep.S_t);
    sweep.E_analytic.push_back(ep.E_analytic);
    sweep.E_finite_diff.push_back(ep.E_finite_diff);
    integral += t_max * gl.weights[q] * ep.E_analytic;
  }
  const auto end = entropy_production(spec, t_max, u_quad);
  sweep.cumulative_residual = std::abs(integral - end.S_t);
  return sweep;
}

}  // namespace fkms
