#include "model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

namespace {

constexpr double kPi = std::numbers::pi;

double intpow(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::array<int, 3> decode(int flat, int N, int dim) {
  std::array<int, 3> idx{0, 0, 0};
  for (int ax = dim - 1; ax >= 0; --ax) {
    idx[ax] = flat % N;
    flat /= N;
  }
  return idx;
}

}  // namespace

int LatticeModel::n_sites() const {
  int s = 1;
  for (int i = 0; i < spatial_dim; ++i) s *= n_modes_per_axis;
  return s;
}

double LatticeModel::momentum_spacing() const { return 2.0 * kPi / box_length; }

double LatticeModel::momentum_cell_volume() const {
  return intpow(momentum_spacing(), spatial_dim);
}

double LatticeModel::max_momentum() const {
  return momentum_spacing() * (n_modes_per_axis - 1) / 2;
}

void LatticeModel::validate() const {
  if (spatial_dim != 1 && spatial_dim != 3)
    throw std::invalid_argument("LatticeModel: spatial_dim must be 1 or 3");
  if (n_modes_per_axis < 1 || n_modes_per_axis % 2 == 0)
    throw std::invalid_argument("LatticeModel: n_modes_per_axis must be odd and positive");
  if (!(box_length > 0.0))
    throw std::invalid_argument("LatticeModel: box_length must be positive");
  if (!(mass > 0.0))
    throw std::invalid_argument("LatticeModel: mass must be positive");
}

std::array<int, 3> LatticeModel::mode_of(int flat) const {
  auto idx = decode(flat, n_modes_per_axis, spatial_dim);
  for (int ax = 0; ax < spatial_dim; ++ax) idx[ax] -= (n_modes_per_axis - 1) / 2;
  return idx;
}

std::array<double, 3> LatticeModel::momentum_of(int flat) const {
  const auto n = mode_of(flat);
  const double dk = momentum_spacing();
  return {dk * n[0], dk * n[1], dk * n[2]};
}

std::array<double, 3> LatticeModel::site_of(int flat) const {
  const auto idx = decode(flat, n_modes_per_axis, spatial_dim);
  const double dx = box_length / n_modes_per_axis;
  return {dx * idx[0], dx * idx[1], dx * idx[2]};
}

const Matrix& pauli(int i) {
  static const Matrix s1 = [] {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
  }();
  static const Matrix s2 = [] {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
  }();
  static const Matrix s3 = [] {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
  }();
  switch (i) {
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
  }
  throw std::invalid_argument("pauli: index must be 1..3");
}

Matrix alpha_matrix(int spatial_dim, int i) {
  if (spatial_dim == 1) {
    if (i != 1) throw std::invalid_argument("alpha_matrix: 1D has only alpha_1");
    return pauli(1);
  }
  Matrix a = Matrix::Zero(4, 4);
  a.block(0, 2, 2, 2) = pauli(i);
  a.block(2, 0, 2, 2) = pauli(i);
  return a;
}

Matrix beta_matrix(int spatial_dim) {
  if (spatial_dim == 1) return pauli(3);
  Matrix b = Matrix::Zero(4, 4);
  b(0, 0) = b(1, 1) = 1.0;
  b(2, 2) = b(3, 3) = -1.0;
  return b;
}

HermitianOperator build_dirac(const LatticeModel& model, bool subtract_mu) {
  model.validate();
  const int s = model.spinor_dim();
  const int sites = model.n_sites();
  Matrix D = Matrix::Zero(model.total_dim(), model.total_dim());
  const Matrix bm = beta_matrix(model.spatial_dim);
  for (int f = 0; f < sites; ++f) {
    const auto k = model.momentum_of(f);
    Matrix block = model.mass * bm;
    for (int i = 1; i <= model.spatial_dim; ++i) {
      block += k[i - 1] * alpha_matrix(model.spatial_dim, i);
    }
    if (subtract_mu) block -= model.mu * Matrix::Identity(s, s);
    D.block(f * s, f * s, s, s) = block;
  }
  return HermitianOperator(std::move(D), 1e-12 * model.total_dim());
}

Matrix potential_site_block(const LatticeModel& model,
                            const PotentialProfile& profile, int site) {
  const int s = model.spinor_dim();
  Matrix block = Matrix::Zero(s, s);
  if (!profile.components.empty()) {
    block += profile.components[0](site) * Matrix::Identity(s, s);
  }
  for (int i = 1; i < static_cast<int>(profile.components.size()); ++i) {
    block += profile.components[i](site) * alpha_matrix(model.spatial_dim, i);
  }
  return block;
}

namespace {

bool on_boundary_band(const LatticeModel& model, int site, int band) {
  const auto idx = decode(site, model.n_modes_per_axis, model.spatial_dim);
  for (int ax = 0; ax < model.spatial_dim; ++ax) {
    if (idx[ax] < band || idx[ax] >= model.n_modes_per_axis - band) return true;
  }
  return false;
}

void check_profile(const LatticeModel& model, const PotentialProfile& profile) {
  if (profile.components.empty() ||
      static_cast<int>(profile.components.size()) > model.spatial_dim + 1) {
    throw std::invalid_argument("PotentialProfile: need 1..spatial_dim+1 components");
  }
  for (const auto& c : profile.components) {
    if (c.size() != model.n_sites())
      throw std::invalid_argument("PotentialProfile: component size != number of sites");
  }
  if (profile.uniform_test_override) return;
  for (int site = 0; site < model.n_sites(); ++site) {
    if (!on_boundary_band(model, site, profile.boundary_band)) continue;
    for (const auto& c : profile.components) {
      if (c(site) != 0.0) {
        std::ostringstream os;
        os << "PotentialProfile: support touches the boundary band at site " << site;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

// Block DFT of the site profile over the displacement torus:
// T(dn) = (1/N^d) sum_j exp(-2 pi i dn.j / N) block(j).
std::vector<Matrix> displacement_table(const LatticeModel& model,
                                       const PotentialProfile& profile) {
  const int s = model.spinor_dim();
  const int sites = model.n_sites();
  const int N = model.n_modes_per_axis;
  std::vector<Matrix> blocks(sites);
  for (int j = 0; j < sites; ++j) blocks[j] = potential_site_block(model, profile, j);
  std::vector<Matrix> table(sites);
  for (int dflat = 0; dflat < sites; ++dflat) {
    const auto dn = decode(dflat, N, model.spatial_dim);
    Matrix acc = Matrix::Zero(s, s);
    for (int j = 0; j < sites; ++j) {
      const auto jj = decode(j, N, model.spatial_dim);
      double phase = 0.0;
      for (int ax = 0; ax < model.spatial_dim; ++ax) phase += double(dn[ax]) * jj[ax];
      acc += std::polar(1.0, -2.0 * kPi * phase / N) * blocks[j];
    }
    table[dflat] = acc / static_cast<double>(sites);
  }
  return table;
}

}  // namespace

HermitianOperator build_potential(const LatticeModel& model,
                                  const PotentialProfile& profile) {
  model.validate();
  check_profile(model, profile);
  const int s = model.spinor_dim();
  const int sites = model.n_sites();
  const int N = model.n_modes_per_axis;
  const auto table = displacement_table(model, profile);

  Matrix A = Matrix::Zero(model.total_dim(), model.total_dim());
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
      A.block(p * s, q * s, s, s) = table[dflat];
    }
  }
  return HermitianOperator(std::move(A), 1e-10 * model.total_dim());
}

Eigen::VectorXd displacement_amplitudes(const LatticeModel& model,
                                        const PotentialProfile& profile) {
  const auto table = displacement_table(model, profile);
  Eigen::VectorXd amp(table.size());
  for (size_t i = 0; i < table.size(); ++i) amp(i) = table[i].operatorNorm();
  return amp;
}

namespace {

// b(u) = exp(-1/(u(1-u))) on (0,1); S is its normalized antiderivative.
double bump(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::exp(-1.0 / (u * (1.0 - u)));
}

double bump_norm() {
  static const double value = [] {
    const auto& gl = gauss_legendre(64);
    double acc = 0.0;
    for (size_t i = 0; i < gl.nodes.size(); ++i) acc += gl.weights[i] * bump(gl.nodes[i]);
    return acc;
  }();
  return value;
}

double bump_cdf(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const auto& gl = gauss_legendre(64);
  double acc = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i) acc += u * gl.weights[i] * bump(u * gl.nodes[i]);
  return acc / bump_norm();
}

}  // namespace

double SwitchSchedule::h(double t) const {
  if (t >= 0.0) return 1.0;
  if (t <= -window) return 0.0;
  return bump_cdf((t + window) / window);
}

double SwitchSchedule::hdot(double t) const {
  if (t >= 0.0 || t <= -window) return 0.0;
  const double u = (t + window) / window;
  return bump(u) / bump_norm() / window;
}

double SwitchSchedule::hddot(double t) const {
  if (t >= 0.0 || t <= -window) return 0.0;
  const double u = (t + window) / window;
  const double g = u * (1.0 - u);
  const double dlog = (1.0 - 2.0 * u) / (g * g);  // d/du of -1/(u(1-u))
  return bump(u) / bump_norm() * dlog / (window * window);
}

double SwitchSchedule::hdddot(double t) const {
  if (t >= 0.0 || t <= -window) return 0.0;
  const double u = (t + window) / window;
  const double g = u * (1.0 - u);
  const double dlog = (1.0 - 2.0 * u) / (g * g);
  const double d2log =
      -2.0 / (g * g) - 2.0 * (1.0 - 2.0 * u) * (1.0 - 2.0 * u) / (g * g * g);
  return bump(u) / bump_norm() * (dlog * dlog + d2log) /
         (window * window * window);
}

SwitchSample switching(const PotentialProfile& profile, double t) {
  const auto sched = profile.schedule();
  return SwitchSample{sched.h(t), sched.hdot(t), sched.hddot(t)};
}

PotentialProfile gaussian_well_profile(const LatticeModel& model,
                                       double amplitude, double width,
                                       int component, double epsilon,
                                       double T_adiabatic) {
  PotentialProfile p;
  p.components.assign(model.spatial_dim + 1,
                      Eigen::VectorXd::Zero(model.n_sites()));
  p.epsilon = epsilon;
  p.T_adiabatic = T_adiabatic;
  const double c = model.box_length / 2.0;
  for (int site = 0; site < model.n_sites(); ++site) {
    const auto x = model.site_of(site);
    double r2 = 0.0;
    for (int ax = 0; ax < model.spatial_dim; ++ax) {
      const double d = x[ax] - c;
      r2 += d * d;
    }
    double v = amplitude * std::exp(-r2 / (2.0 * width * width));
    // far tails clipped to exact zero: compact-support surrogate
    if (v != 0.0 && std::abs(v) < std::abs(amplitude) * 1e-14) v = 0.0;
    if (on_boundary_band(model, site, p.boundary_band)) v = 0.0;
    p.components[component](site) = v;
  }
  return p;
}

PotentialProfile uniform_profile(const LatticeModel& model, double value,
                                 int component, double epsilon,
                                 double T_adiabatic) {
  PotentialProfile p;
  p.components.assign(model.spatial_dim + 1,
                      Eigen::VectorXd::Zero(model.n_sites()));
  p.components[component].setConstant(model.n_sites(), value);
  p.epsilon = epsilon;
  p.T_adiabatic = T_adiabatic;
  p.uniform_test_override = true;
  return p;
}

}  // namespace fkms
