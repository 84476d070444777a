#include "kms.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace fkms {

double KmsSpec::contraction() const {
  const auto& ev = K.spectral().eigenvalues;
  const double knorm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return beta * knorm;
}

TwoPoint kms_two_point(const Covariance& T, const Vector& f, const Vector& g) {
  if (f.size() != T.dim() || g.size() != T.dim())
    throw std::invalid_argument("kms_two_point: dimension mismatch");
  TwoPoint out;
  out.create_annihilate = f.dot(T.matrix() * g);
  out.annihilate_create = f.dot(g) - out.create_annihilate;
  return out;
}

Complex quasifree_npoint(const Covariance& T, const std::vector<Vector>& fs,
                         const std::vector<Vector>& gs) {
  if (fs.size() != gs.size()) return Complex(0.0, 0.0);
  const int n = static_cast<int>(fs.size());
  if (n == 0) return Complex(1.0, 0.0);
  Matrix G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = fs[i].dot(T.matrix() * gs[j]);
  return G.determinant();
}

namespace {

// Stabilized diagonal factors in the D eigenbasis, valid for a in [0, beta]:
//   gm(a)_i = e^{-a lam_i} / (1 + e^{-beta lam_i})   (norm <= 1)
//   gp(a)_i = e^{ a lam_i} / (1 + e^{ beta lam_i})   (norm <= 1)
RealVector gm_diag(const RealVector& lam, double beta, double a) {
  RealVector v(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    const double l = lam(i);
    v(i) = (l >= 0.0) ? std::exp(-a * l) * fermi_scalar(beta * l)
                      : std::exp((beta - a) * l) * fermi_scalar(-beta * l);
  }
  return v;
}

RealVector gp_diag(const RealVector& lam, double beta, double a) {
  RealVector v(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    const double l = lam(i);
    v(i) = (l >= 0.0) ? std::exp((a - beta) * l) * fermi_scalar(beta * l)
                      : std::exp(a * l) * fermi_scalar(-beta * l);
  }
  return v;
}

// e^{sD} F_{sigma(s)} as a diagonal: -gp(s) for s >= 0, gm(-s) for s < 0.
RealVector sign_factor(const RealVector& lam, double beta, double s) {
  if (s >= 0.0) return -gp_diag(lam, beta, s);
  return gm_diag(lam, beta, -s);
}

struct EigenFrame {
  RealVector lam;  // eigenvalues of D
  Matrix U;        // eigenvectors of D
  Matrix Kt;       // K in the D eigenbasis
  double beta;
};

EigenFrame make_frame(const KmsSpec& spec) {
  const auto& sd = spec.D.spectral();
  EigenFrame fr;
  fr.lam = sd.eigenvalues;
  fr.U = sd.eigenvectors;
  fr.Kt = fr.U.adjoint() * spec.K.matrix() * fr.U;
  fr.beta = spec.beta;
  return fr;
}

// Order-n cube term in the D eigenbasis (includes the (-1)^n sign).
// Iterated per-axis Gauss-Legendre; each axis after the first is split at the
// previous variable's value, where the sigma branch jumps. The innermost axis
// is fused: sum_{u_n} w diag(f(u_{n-1}-u_n)) Kt diag(-gp(u_n)) is accumulated
// entrywise before the single matrix multiply per (n-1)-level node.
class CubeTermGL {
 public:
  CubeTermGL(const EigenFrame& fr, double ub, int n, int qp)
      : fr_(fr), ub_(ub), n_(n), gl_(gauss_legendre(qp)) {}

  Matrix compute() {
    const int d = static_cast<int>(fr_.lam.size());
    acc_ = Matrix::Zero(d, d);
    if (n_ == 1) {
      // single axis: sum of diag(gm(u)) Kt diag(-gp(u)), entrywise
      for (size_t q = 0; q < gl_.nodes.size(); ++q) {
        const double u = ub_ * gl_.nodes[q];
        const double w = ub_ * gl_.weights[q];
        add_scaled(acc_, gm_diag(fr_.lam, fr_.beta, u), fr_.Kt,
                   -gp_diag(fr_.lam, fr_.beta, u), w);
      }
    } else {
      for (size_t q = 0; q < gl_.nodes.size(); ++q) {
        const double u1 = ub_ * gl_.nodes[q];
        const double w1 = ub_ * gl_.weights[q];
        Matrix P1 = gm_diag(fr_.lam, fr_.beta, u1).asDiagonal() * fr_.Kt;
        descend(2, u1, w1, P1);
      }
    }
    return (n_ % 2 == 0) ? acc_ : Matrix(-acc_);
  }

 private:
  // X += w * diag(l) * Kt * diag(r), entrywise
  static void add_scaled(Matrix& X, const RealVector& l, const Matrix& Kt,
                         const RealVector& r, double w) {
    const int d = static_cast<int>(l.size());
    for (int j = 0; j < d; ++j) {
      const double rj = w * r(j);
      for (int i = 0; i < d; ++i) X(i, j) += l(i) * rj * Kt(i, j);
    }
  }

  void descend(int level, double uprev, double wprod, const Matrix& partial) {
    const int d = static_cast<int>(fr_.lam.size());
    const double panels[2][2] = {{0.0, uprev}, {uprev, ub_}};
    if (level == n_) {
      // fused innermost axis
      Matrix bracket = Matrix::Zero(d, d);
      for (const auto& pan : panels) {
        const double a = pan[0], b = pan[1];
        if (b - a <= 0.0) continue;
        for (size_t q = 0; q < gl_.nodes.size(); ++q) {
          const double u = a + (b - a) * gl_.nodes[q];
          const double w = (b - a) * gl_.weights[q];
          add_scaled(bracket, sign_factor(fr_.lam, fr_.beta, uprev - u), fr_.Kt,
                     -gp_diag(fr_.lam, fr_.beta, u), w);
        }
      }
      acc_ += wprod * (partial * bracket);
      return;
    }
    for (const auto& pan : panels) {
      const double a = pan[0], b = pan[1];
      if (b - a <= 0.0) continue;
      for (size_t q = 0; q < gl_.nodes.size(); ++q) {
        const double u = a + (b - a) * gl_.nodes[q];
        const double w = (b - a) * gl_.weights[q];
        Matrix next =
            partial * (sign_factor(fr_.lam, fr_.beta, uprev - u).asDiagonal() * fr_.Kt);
        descend(level + 1, u, wprod * w, next);
      }
    }
  }

  const EigenFrame& fr_;
  double ub_;
  int n_;
  const GaussLegendre& gl_;
  Matrix acc_;
};

Matrix cube_term_qmc(const EigenFrame& fr, double ub, int n, long long samples) {
  const int d = static_cast<int>(fr.lam.size());
  Matrix acc = Matrix::Zero(d, d);
  const double volume = std::pow(ub, n);
  for (long long s = 0; s < samples; ++s) {
    const auto x = halton_point(s, n);
    std::vector<double> u(n);
    for (int j = 0; j < n; ++j) u[j] = ub * x[j];
    Matrix P = gm_diag(fr.lam, fr.beta, u[0]).asDiagonal() * fr.Kt;
    for (int j = 1; j + 1 < n; ++j) {
      P = P * (sign_factor(fr.lam, fr.beta, u[j - 1] - u[j]).asDiagonal() * fr.Kt);
    }
    Matrix last = sign_factor(fr.lam, fr.beta, u[n - 2] - u[n - 1]).asDiagonal() * fr.Kt;
    last = last * (-gp_diag(fr.lam, fr.beta, u[n - 1])).asDiagonal();
    acc += P * last;
  }
  acc *= volume / static_cast<double>(samples);
  // each true term is hermitian (it is a Taylor coefficient of a hermitian
  // family); symmetrizing removes the sampling asymmetry
  acc = 0.5 * (acc + acc.adjoint()).eval();
  return (n % 2 == 0) ? acc : Matrix(-acc);
}

constexpr long long kQmcSamples = 1 << 13;

Matrix term_in_frame(const EigenFrame& fr, double ub, int n, int qp) {
  if (n <= 4) return CubeTermGL(fr, ub, n, qp).compute();
  return cube_term_qmc(fr, ub, n, kQmcSamples);
}

void require_convergent(const KmsSpec& spec) {
  const double c = spec.contraction();
  if (c >= 1.0) {
    std::ostringstream os;
    os << "series requires beta*|K| < 1 (convergence hypothesis); got " << c;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Matrix t_series_term(const KmsSpec& spec, double u_bar, int n, int quad_points) {
  require_convergent(spec);
  const auto fr = make_frame(spec);
  Matrix t = term_in_frame(fr, u_bar, n, quad_points);
  return fr.U * t * fr.U.adjoint();
}

Matrix t_series_term_qmc(const KmsSpec& spec, double u_bar, int n,
                         long long samples) {
  if (n < 2) throw std::invalid_argument("t_series_term_qmc: n must be >= 2");
  require_convergent(spec);
  const auto fr = make_frame(spec);
  Matrix t = cube_term_qmc(fr, u_bar, n, samples);
  return fr.U * t * fr.U.adjoint();
}

OperatorSeries t_series(const KmsSpec& spec, double u_bar, int N,
                        int quad_points, bool with_estimate) {
  require_convergent(spec);
  if (u_bar < 0.0 || u_bar > spec.beta)
    throw std::invalid_argument("t_series: u_bar must lie in [0, beta]");
  const auto fr = make_frame(spec);
  const int d = spec.D.dim();

  Matrix sum = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) sum(i, i) = fermi_scalar(spec.beta * fr.lam(i));
  double quad_est = 0.0;
  for (int n = 1; n <= N; ++n) {
    Matrix t = term_in_frame(fr, u_bar, n, quad_points);
    if (with_estimate) {
      Matrix t2 = (n <= 4) ? CubeTermGL(fr, u_bar, n, std::max(3, quad_points - 3)).compute()
                           : cube_term_qmc(fr, u_bar, n, kQmcSamples / 2);
      quad_est += (t - t2).operatorNorm();
    }
    sum += t;
  }

  OperatorSeries out;
  out.value = fr.U * sum * fr.U.adjoint();
  out.order = N;
  const double c = spec.contraction();
  out.truncation_bound = std::pow(c, N + 1) / (1.0 - c);
  out.quadrature_estimate = quad_est;
  return out;
}

namespace {

// composite Simpson weights for n_intervals uniform intervals of width h;
// odd counts end with a 3/8 block, a single interval is trapezoidal.
std::vector<double> simpson_weights(int n_intervals, double h) {
  std::vector<double> w(n_intervals + 1, 0.0);
  if (n_intervals <= 0) return w;
  if (n_intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  int simpson_end = n_intervals;  // interval count handled by 1/3 rule
  if (n_intervals % 2 == 1) simpson_end = n_intervals - 3;
  for (int k = 0; k + 2 <= simpson_end; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson_end < n_intervals) {
    const int k = simpson_end;  // 3/8 rule on the last three intervals
    w[k] += 3.0 * h / 8.0;
    w[k + 1] += 9.0 * h / 8.0;
    w[k + 2] += 9.0 * h / 8.0;
    w[k + 3] += 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace

std::vector<double> t_recursive_residuals(const KmsSpec& spec, int N,
                                          int grid_points) {
  require_convergent(spec);
  const auto fr = make_frame(spec);
  const int M = grid_points;
  const double h = spec.beta / M;

  // target F_-(D+K) in the D eigenbasis
  HermitianOperator DK(spec.D.matrix() + spec.K.matrix(),
                       1e-9 * std::max(1.0, spec.D.matrix().norm() + spec.K.matrix().norm()));
  const Matrix target =
      fr.U.adjoint() * fermi_factor(DK, spec.beta, FermiSign::minus).matrix() * fr.U;

  // diagonal kernels on the uniform grid: left-branch gm((i-j)h), right-branch gp((j-i)h)
  std::vector<RealVector> gm_k(M + 1), gp_k(M + 1);
  for (int k = 0; k <= M; ++k) {
    gm_k[k] = gm_diag(fr.lam, fr.beta, k * h);
    gp_k[k] = gp_diag(fr.lam, fr.beta, k * h);
  }
  std::vector<std::vector<double>> left_w(M + 1), right_w(M + 1);
  for (int i = 0; i <= M; ++i) {
    left_w[i] = simpson_weights(i, h);
    right_w[i] = simpson_weights(M - i, h);
  }

  std::vector<Matrix> W(M + 1);
  for (int i = 0; i <= M; ++i) W[i] = Matrix(gm_k[i].asDiagonal());

  std::vector<double> residuals;
  residuals.push_back((W[0] - target).operatorNorm());

  std::vector<Matrix> X(M + 1);
  for (int it = 0; it < N; ++it) {
    for (int j = 0; j <= M; ++j) X[j] = W[j] * fr.Kt;
    std::vector<Matrix> Wnext(M + 1);
    for (int i = 0; i <= M; ++i) {
      Matrix acc = Matrix(gm_k[i].asDiagonal());
      // int_0^{u_i}: kernel e^{(u_j - u_i) D} F_- = gm((i-j)h)
      for (int j = 0; j <= i; ++j) {
        const double w = left_w[i][j];
        if (w == 0.0) continue;
        acc.noalias() -= w * (X[j] * gm_k[i - j].asDiagonal());
      }
      // int_{u_i}^{beta}: kernel e^{(u_j - u_i) D} F_+ = -gp((j-i)h)
      for (int j = i; j <= M; ++j) {
        const double w = right_w[i][j - i];
        if (w == 0.0) continue;
        acc.noalias() += w * (X[j] * gp_k[j - i].asDiagonal());
      }
      Wnext[i] = std::move(acc);
    }
    W = std::move(Wnext);
    residuals.push_back((W[0] - target).operatorNorm());
  }
  return residuals;
}

double t_recursive_residual(const KmsSpec& spec, int N, int grid_points) {
  return t_recursive_residuals(spec, N, grid_points).back();
}

double simplex_cube_check(const KmsSpec& spec, int n, int quad_points) {
  if (n < 1 || n > 3)
    throw std::invalid_argument("simplex_cube_check: n must be 1..3");
  require_convergent(spec);
  const auto fr = make_frame(spec);
  const int d = spec.D.dim();
  const double ub = spec.beta;

  const Matrix cube = term_in_frame(fr, ub, n, quad_points);

  // permutation sum over the ordered simplex 0 < u_1 < ... < u_n < ub,
  // iterated Gauss-Legendre through the substitution u_j = u_{j+1} x_j
  const auto& gl = gauss_legendre(quad_points);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Matrix simplex = Matrix::Zero(d, d);

  std::function<void(int, std::vector<double>&, double)> iterate =
      [&](int level, std::vector<double>& u, double wprod) {
        // level counts down from n-1 (u index) to 0
        const double upper = (level == n - 1) ? ub : u[level + 1];
        for (size_t q = 0; q < gl.nodes.size(); ++q) {
          u[level] = upper * gl.nodes[q];
          const double w = wprod * upper * gl.weights[q];
          if (level > 0) {
            iterate(level - 1, u, w);
          } else {
            // all u fixed, ordered ascending: add every permutation's chain
            do {
              Matrix P = gm_diag(fr.lam, fr.beta, u[perm[0]]).asDiagonal() * fr.Kt;
              for (int j = 0; j + 1 < n; ++j) {
                P = P * (sign_factor(fr.lam, fr.beta, u[perm[j]] - u[perm[j + 1]])
                             .asDiagonal() *
                         fr.Kt);
              }
              P = P * (-gp_diag(fr.lam, fr.beta, u[perm[n - 1]])).asDiagonal();
              simplex += w * P;
            } while (std::next_permutation(perm.begin(), perm.end()));
            std::sort(perm.begin(), perm.end());
          }
        }
      };
  std::vector<double> u(n, 0.0);
  iterate(n - 1, u, 1.0);
  if (n % 2 == 1) simplex = -simplex;

  return (cube - simplex).operatorNorm();
}

}  // namespace fkms
