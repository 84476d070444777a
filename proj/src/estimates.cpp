#include "estimates.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

namespace {

constexpr double kPi = std::numbers::pi;

// 64-point GL integral of w over [a, b]
double integrate(const std::function<double(double)>& w, double a, double b) {
  if (b <= a) return 0.0;
  const auto& gl = gauss_legendre(64);
  double acc = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i)
    acc += (b - a) * gl.weights[i] * w(a + (b - a) * gl.nodes[i]);
  return acc;
}

double sup_on(const std::function<double(double)>& w, double a, double b) {
  double m = 0.0;
  const int n = 4096;
  for (int i = 0; i <= n; ++i) {
    m = std::max(m, std::abs(w(a + (b - a) * i / n)));
  }
  return m;
}

struct SpatialNorms {
  double l1;      // sum_k a(k)  ~ int |Ahat| d^dk
  double l2;      // sqrt(sum_k a(k)^2 / cell) ~ (int |Ahat|^2)^{1/2}
  double max_i;   // max(l1, l2): one time slice of the I-norm members
};

SpatialNorms spatial_norms(const LatticeModel& model,
                           const PotentialProfile& profile) {
  const auto amp = displacement_amplitudes(model, profile);
  SpatialNorms s;
  s.l1 = amp.sum();
  s.l2 = std::sqrt(amp.squaredNorm() / model.momentum_cell_volume());
  s.max_i = std::max(s.l1, s.l2);
  return s;
}

std::string digest(const LatticeModel& model, const PotentialProfile& profile) {
  std::ostringstream os;
  double a0 = 0.0;
  for (const auto& c : profile.components) a0 = std::max(a0, c.cwiseAbs().maxCoeff());
  os << "d=" << model.spatial_dim << " N=" << model.n_modes_per_axis
     << " L=" << model.box_length << " m=" << model.mass
     << " w=" << profile.window() << " |A|max=" << a0;
  return os.str();
}

}  // namespace

Jet2 Jet2::exp() const {
  const double e = std::exp(v);
  return {e, e * d1, e * (d1 * d1 + d2)};
}

double hs_weight_constant(int spatial_dim, double mass) {
  if (spatial_dim == 3) return kPi / std::sqrt(mass);
  if (spatial_dim == 1) return std::sqrt(kPi / 2.0) / (mass * std::sqrt(mass));
  throw std::invalid_argument("hs_weight_constant: spatial_dim must be 1 or 3");
}

BoundCheck hs_bound_U(const LatticeModel& model, const PotentialProfile& profile,
                      double hold_time, double step) {
  const auto D = build_dirac(model, /*subtract_mu=*/false);
  const auto A = build_potential(model, profile);
  const auto sched = profile.schedule();
  const double w = profile.window();

  // round trip: g(t) = h(t) - h(t - hold_time - w), support [-w, hold_time + w]
  auto g = [&](double t) { return sched.h(t) - sched.h(t - hold_time - w); };
  auto gdot = [&](double t) { return sched.hdot(t) - sched.hdot(t - hold_time - w); };
  auto gddot = [&](double t) { return sched.hddot(t) - sched.hddot(t - hold_time - w); };

  SeparablePotential At{A.matrix(), g};
  const auto ev = dyson_evolve(D, At, -w, hold_time + w, step);
  const auto proj = spectral_projectors(D);
  const double lhs = (proj.P * ev.V * proj.Q).norm();

  const auto sp = spatial_norms(model, profile);
  const double t0 = -w, t1 = hold_time + w;
  const double IA = integrate([&](double t) { return std::abs(g(t)); }, t0, t1) * sp.max_i;
  const double IAd = integrate([&](double t) { return std::abs(gdot(t)); }, t0, t1) * sp.max_i;
  const double IAdd = integrate([&](double t) { return std::abs(gddot(t)); }, t0, t1) * sp.max_i;

  const Jet2 bound = Jet2::quadratic(IA, IAd, IAdd).exp();
  BoundCheck out;
  out.name = "hs_bound_U";
  out.lhs = lhs;
  out.rhs = hs_weight_constant(model.spatial_dim, model.mass) * bound.d2;
  out.margin = out.rhs - out.lhs;
  out.inputs_digest = digest(model, profile);
  return out;
}

namespace {

// cyclic convolution on the displacement torus with the continuum measure
Eigen::VectorXd torus_convolve(const LatticeModel& model,
                               const Eigen::VectorXd& f,
                               const Eigen::VectorXd& g) {
  const int N = model.n_modes_per_axis;
  const int sites = model.n_sites();
  const double cell = model.momentum_cell_volume();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sites);
  std::vector<std::array<int, 3>> idx(sites);
  for (int i = 0; i < sites; ++i) {
    int rest = i;
    for (int ax = model.spatial_dim - 1; ax >= 0; --ax) {
      idx[i][ax] = rest % N;
      rest /= N;
    }
  }
  for (int a = 0; a < sites; ++a) {
    double acc = 0.0;
    for (int b = 0; b < sites; ++b) {
      int dflat = 0;
      for (int ax = 0; ax < model.spatial_dim; ++ax) {
        int d = idx[a][ax] - idx[b][ax];
        d = ((d % N) + N) % N;
        dflat = dflat * N + d;
      }
      acc += f(dflat) * g(b);
    }
    out(a) = acc * cell;
  }
  return out;
}

// exp_*(f) = delta + f + f*f/2! + ..., truncated once the l1 tail vanishes
Eigen::VectorXd convolution_exponential(const LatticeModel& model,
                                        const Eigen::VectorXd& f) {
  const double cell = model.momentum_cell_volume();
  const int sites = model.n_sites();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sites);
  out(0) = 1.0 / cell;  // delta
  Eigen::VectorXd power = out;
  const double l1 = f.sum() * cell;
  double term_l1 = 1.0;
  for (int j = 1; j < 200; ++j) {
    power = torus_convolve(model, power, f) / j;
    out += power;
    term_l1 *= l1 / j;
    if (term_l1 < 1e-14) break;
  }
  return out;
}

}  // namespace

KernelDomination kernel_bound_H(const LatticeModel& model,
                                const PotentialProfile& profile,
                                const HermitianOperator& K) {
  const double cell = model.momentum_cell_volume();
  const int sites = model.n_sites();
  const int s = model.spinor_dim();
  const auto amp = displacement_amplitudes(model, profile);
  const auto sched = profile.schedule();
  const double w = profile.window();

  // continuum-normalized time-slice kernels
  const double int_h = integrate([&](double t) { return sched.h(t); }, -w, 0.0);
  Eigen::VectorXd Eon = amp * (int_h / cell);   // int dt |Ahat(t)|
  Eigen::VectorXd Emid = amp / cell;            // int dt |Adot-hat(t)|, int hdot = 1

  const Eigen::VectorXd expE = convolution_exponential(model, Eon);
  Eigen::VectorXd H = torus_convolve(model, expE, Emid);
  H = torus_convolve(model, H, expE);

  KernelDomination out;
  out.bound.H = H;
  out.bound.l1 = H.sum() * cell;
  out.bound.l2 = std::sqrt(H.squaredNorm() * cell);

  // pointwise domination of the computed K kernel
  const int N = model.n_modes_per_axis;
  double worst = -1e300;
  for (int p = 0; p < sites; ++p) {
    const auto np = model.mode_of(p);
    for (int q = 0; q < sites; ++q) {
      const auto nq = model.mode_of(q);
      int dflat = 0;
      for (int ax = 0; ax < model.spatial_dim; ++ax) {
        int d = np[ax] - nq[ax];
        d = ((d % N) + N) % N;
        dflat = dflat * N + d;
      }
      const double khat = K.matrix().block(p * s, q * s, s, s).operatorNorm() / cell;
      worst = std::max(worst, khat - H(dflat));
    }
  }
  out.worst_gap = worst;
  out.pointwise_pass = worst <= 1e-8;

  const auto sp = spatial_norms(model, profile);
  const double sup_hdot = sup_on([&](double t) { return sched.hdot(t); }, -w, 0.0);
  const double lnorm_A = sp.max_i;            // sup_t h = 1
  const double lnorm_Adot = sup_hdot * sp.max_i;
  const double rhs = w * lnorm_Adot * std::exp(2.0 * w * lnorm_A);
  out.l1_check = BoundCheck{"kernel_H_l1", out.bound.l1, rhs, rhs - out.bound.l1,
                            digest(model, profile)};
  out.l2_check = BoundCheck{"kernel_H_l2", out.bound.l2, rhs, rhs - out.bound.l2,
                            digest(model, profile)};
  return out;
}

BoundCheck hs_bound_K(const LatticeModel& model, const PotentialProfile& profile,
                      const HermitianOperator& K) {
  const auto D = build_dirac(model, /*subtract_mu=*/false);
  const auto proj = spectral_projectors(D);
  const double lhs = (proj.P * K.matrix() * proj.Q).norm();

  const auto sp = spatial_norms(model, profile);
  const auto sched = profile.schedule();
  const double w = profile.window();
  const double sup_hd = sup_on([&](double t) { return sched.hdot(t); }, -w, 0.0);
  const double sup_hdd = sup_on([&](double t) { return sched.hddot(t); }, -w, 0.0);
  const double sup_hddd = sup_on([&](double t) { return sched.hdddot(t); }, -w, 0.0);

  const double lA = sp.max_i;
  const double lAd = sup_hd * sp.max_i;
  const double lAdd = sup_hdd * sp.max_i;
  const double lAddd = sup_hddd * sp.max_i;

  const Jet2 expo = Jet2::quadratic(2.0 * w * lA, 2.0 * w * lAd, 2.0 * w * lAdd).exp();
  const Jet2 poly = Jet2::quadratic(lAd, lAdd, lAddd);
  const Jet2 full = expo * poly;

  BoundCheck out;
  out.name = "hs_bound_K";
  out.lhs = lhs;
  out.rhs = hs_weight_constant(model.spatial_dim, model.mass) * w * full.d2;
  out.margin = out.rhs - out.lhs;
  out.inputs_digest = digest(model, profile);
  return out;
}

AdiabaticSweep adiabatic_sweep(const LatticeModel& model,
                               const PotentialProfile& base_profile,
                               const std::vector<double>& T_list, double step) {
  if (T_list.size() < 2)
    throw std::invalid_argument("adiabatic_sweep: need at least two T values");
  const auto D = build_dirac(model, /*subtract_mu=*/false);
  const auto A = build_potential(model, base_profile);
  const auto proj = spectral_projectors(D);

  AdiabaticSweep out;
  out.T_values = T_list;
  for (double T : T_list) {
    PotentialProfile p = base_profile;
    p.T_adiabatic = T;
    const double w = p.window();
    const double this_step = std::min(step, w / 400.0);
    const auto io = compute_K(D, A, p.schedule(), this_step);
    out.hs_norms.push_back((proj.P * io.K.matrix() * proj.Q).norm());
  }
  const auto fit = loglog_fit(out.T_values, out.hs_norms);
  out.fitted_exponent = fit.slope;
  out.r_squared = fit.r_squared;
  out.conclusive = fit.r_squared >= 0.95;
  return out;
}

StationaryPhase stationary_phase(int spatial_dim, double box_length,
                                 int n_modes_per_axis, double mass,
                                 const std::function<double(double)>& f,
                                 const std::vector<double>& t_grid) {
  const double recurrence = box_length;  // ballistic wrap-around, |v| < 1
  for (double t : t_grid) {
    if (t > 0.5 * recurrence) {
      std::ostringstream os;
      os << "stationary_phase: t = " << t << " beyond half the recurrence time "
         << 0.5 * recurrence;
      throw std::invalid_argument(os.str());
    }
  }
  const double dk = 2.0 * kPi / box_length;
  const int half = (n_modes_per_axis - 1) / 2;

  StationaryPhase out;
  out.t_grid = t_grid;
  if (spatial_dim == 1) {
    const double cell = dk;
    for (double t : t_grid) {
      Complex acc(0.0, 0.0);
      for (int n = -half; n <= half; ++n) {
        const double k = dk * n;
        acc += std::polar(f(std::abs(k)), t * std::sqrt(k * k + mass * mass));
      }
      out.values.push_back(std::abs(acc) * cell);
    }
  } else if (spatial_dim == 3) {
    // radial bucketing: the summand depends on |k|^2 = dk^2 (n1^2+n2^2+n3^2)
    const int max_r2 = 3 * half * half;
    std::vector<long long> count(max_r2 + 1, 0);
    for (int a = -half; a <= half; ++a)
      for (int b = -half; b <= half; ++b)
        for (int c = -half; c <= half; ++c) count[a * a + b * b + c * c]++;
    const double cell = dk * dk * dk;
    for (double t : t_grid) {
      Complex acc(0.0, 0.0);
      for (int r2 = 0; r2 <= max_r2; ++r2) {
        if (!count[r2]) continue;
        const double k = dk * std::sqrt(double(r2));
        acc += double(count[r2]) *
               std::polar(f(k), t * std::sqrt(k * k + mass * mass));
      }
      out.values.push_back(std::abs(acc) * cell);
    }
  } else {
    throw std::invalid_argument("stationary_phase: spatial_dim must be 1 or 3");
  }

  const auto fit = loglog_fit(out.t_grid, out.values);
  out.fitted_exponent = fit.slope;
  out.r_squared = fit.r_squared;
  out.conclusive = fit.r_squared >= 0.95;
  return out;
}

std::vector<PowersStormerPoint> powers_stormer(
    const std::vector<LatticeModel>& models,
    const std::function<PotentialProfile(const LatticeModel&)>& profile_of,
    double beta, double step) {
  std::vector<PowersStormerPoint> out;
  for (const auto& model : models) {
    const auto D = build_dirac(model, /*subtract_mu=*/false);
    const auto profile = profile_of(model);
    const auto A = build_potential(model, profile);
    const auto io = compute_K(D, A, profile.schedule(), step);
    HermitianOperator DK(D.matrix() + io.K.matrix(),
                         1e-8 * std::max(1.0, D.matrix().norm()));
    auto sqrt_f = [](double x) { return std::sqrt(std::max(0.0, x)); };
    const Matrix Ah = fermi_factor(DK, beta, FermiSign::minus).matrix();
    const Matrix Bh = fermi_factor(D, beta, FermiSign::minus).matrix();
    const Matrix sqA = HermitianOperator(Ah, 1e-8).apply_function(sqrt_f, "sqrt");
    const Matrix sqB = HermitianOperator(Bh, 1e-8).apply_function(sqrt_f, "sqrt");
    const int n = D.dim();
    const Matrix cA = Matrix::Identity(n, n) - Ah;
    const Matrix cB = Matrix::Identity(n, n) - Bh;
    const Matrix sqcA = HermitianOperator(cA, 1e-8).apply_function(sqrt_f, "sqrt");
    const Matrix sqcB = HermitianOperator(cB, 1e-8).apply_function(sqrt_f, "sqrt");
    PowersStormerPoint pt;
    pt.n_modes = model.n_modes_per_axis;
    pt.hs_sqrt = (sqA - sqB).norm();
    pt.hs_sqrt_complement = (sqcA - sqcB).norm();
    out.push_back(pt);
  }
  return out;
}

double lundberg_check(const HermitianOperator& D, const Matrix& X, double beta) {
  const auto& sd = D.spectral();
  const int n = D.dim();
  const Matrix Xt = sd.eigenvectors.adjoint() * X * sd.eigenvectors;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sa = std::sqrt(fermi_scalar(beta * sd.eigenvalues(i)));
    for (int j = 0; j < n; ++j) {
      const double sb = std::sqrt(fermi_scalar(-beta * sd.eigenvalues(j)));
      acc += std::norm(sa * Xt(i, j) * sb);
    }
  }
  return std::sqrt(acc);
}

Purification purification(const Covariance& A) {
  const int n = A.dim();
  const Matrix R = A.op().apply_function(
      [](double a) { return std::sqrt(std::max(0.0, a * (1.0 - a))); }, "sqrt_a_1ma");
  Matrix E = Matrix::Zero(2 * n, 2 * n);
  E.block(0, 0, n, n) = A.matrix();
  E.block(n, n, n, n) = A.matrix();
  E.block(0, n, n, n) = R;
  E.block(n, 0, n, n) = R;
  Purification out;
  out.defect = (E * E - E).operatorNorm();
  out.E = std::move(E);
  return out;
}

}  // namespace fkms
