#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "model.hpp"
#include "quadrature.hpp"
#include "test_util.hpp"

using namespace fkms;

TEST_CASE("free Dirac: single mode at rest has eigenvalues -m, m") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 1;
  m.box_length = 5.0;
  m.mass = 0.7;
  const auto D = build_dirac(m);
  const auto sd = D.spectral();
  CHECK(sd.eigenvalues(0) == doctest::Approx(-0.7));
  CHECK(sd.eigenvalues(1) == doctest::Approx(0.7));
}

TEST_CASE("free Dirac: dispersion, symmetry, gap, projector rank") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 15;
  m.box_length = 12.0;
  m.mass = 1.0;
  const auto D = build_dirac(m);
  CHECK(hermiticity_defect(D.matrix()) <= 1e-12);
  const auto sd = D.spectral();

  // spectrum is {±sqrt(k²+m²)}; symmetric about 0 at mu = 0
  std::multiset<double> expected;
  for (int f = 0; f < m.n_sites(); ++f) {
    const double k = m.momentum_of(f)[0];
    expected.insert(-std::sqrt(k * k + 1.0));
    expected.insert(std::sqrt(k * k + 1.0));
  }
  auto it = expected.begin();
  for (int i = 0; i < D.dim(); ++i, ++it)
    CHECK(sd.eigenvalues(i) == doctest::Approx(*it).epsilon(1e-12));

  for (int i = 0; i < D.dim(); ++i)
    CHECK(std::abs(sd.eigenvalues(i)) >= 1.0 - 1e-12);  // gap (-m, m)

  const auto pq = spectral_projectors(D);
  CHECK(std::lround(pq.P.trace().real()) == D.dim() / 2);
}

TEST_CASE("free Dirac with chemical potential is the spectral shift") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 7;
  m.box_length = 8.0;
  m.mass = 0.5;
  m.mu = 0.3;
  const auto D = build_dirac(m);
  const auto D0 = build_dirac(m, /*subtract_mu=*/false);
  CHECK((D.matrix() - (D0.matrix() - 0.3 * Matrix::Identity(D.dim(), D.dim())))
            .operatorNorm() <= 1e-14);
  // |eigenvalues + mu| >= m
  const auto sd = D.spectral();
  for (int i = 0; i < D.dim(); ++i)
    CHECK(std::abs(sd.eigenvalues(i) + 0.3) >= 0.5 - 1e-12);
}

TEST_CASE("free Dirac 3D: dispersion and doubling-free low modes") {
  LatticeModel m;
  m.spatial_dim = 3;
  m.n_modes_per_axis = 3;
  m.box_length = 9.0;
  m.mass = 1.2;
  const auto D = build_dirac(m);
  CHECK(D.dim() == 4 * 27);
  const auto sd = D.spectral();
  std::multiset<double> expected;
  for (int f = 0; f < m.n_sites(); ++f) {
    const auto k = m.momentum_of(f);
    const double w = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + 1.44);
    expected.insert(-w);
    expected.insert(-w);
    expected.insert(w);
    expected.insert(w);
  }
  auto it = expected.begin();
  for (int i = 0; i < D.dim(); ++i, ++it)
    CHECK(sd.eigenvalues(i) == doctest::Approx(*it).epsilon(1e-12));
}

TEST_CASE("doubling the cutoff leaves low-momentum blocks unchanged") {
  LatticeModel small;
  small.spatial_dim = 1;
  small.n_modes_per_axis = 9;
  small.box_length = 10.0;
  small.mass = 1.0;
  LatticeModel big = small;
  big.n_modes_per_axis = 19;
  const auto Ds = build_dirac(small);
  const auto Db = build_dirac(big);
  // exact dispersion: identical blocks for shared momenta
  for (int f = 0; f < small.n_sites(); ++f) {
    const double ks = small.momentum_of(f)[0];
    for (int g = 0; g < big.n_sites(); ++g) {
      if (std::abs(big.momentum_of(g)[0] - ks) < 1e-12) {
        CHECK((Ds.matrix().block(2 * f, 2 * f, 2, 2) -
               Db.matrix().block(2 * g, 2 * g, 2, 2)).norm() <= 1e-14);
      }
    }
  }
}

TEST_CASE("mass must be positive") {
  LatticeModel m;
  m.mass = 0.0;
  CHECK_THROWS_AS(build_dirac(m), std::invalid_argument);
}

TEST_CASE("potential: zero profile, uniform override, pointwise norm oracle") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 11;
  m.box_length = 10.0;
  m.mass = 1.0;

  PotentialProfile zero;
  zero.components.assign(2, Eigen::VectorXd::Zero(m.n_sites()));
  zero.epsilon = 1.0;
  zero.T_adiabatic = 1.0;
  CHECK(build_potential(m, zero).matrix().operatorNorm() == 0.0);

  const auto uni = uniform_profile(m, 0.4, 0, 1.0, 1.0);
  const auto U = build_potential(m, uni);
  CHECK((U.matrix() - 0.4 * Matrix::Identity(m.total_dim(), m.total_dim()))
            .operatorNorm() <= 1e-12);

  // generic profile: operator norm equals the max over sites of the block norm
  auto gauss = gaussian_well_profile(m, -0.6, 1.2, 0, 1.0, 1.0);
  // add a spatial component to make the block non-scalar
  for (int s = 0; s < m.n_sites(); ++s)
    gauss.components[1](s) = 0.3 * gauss.components[0](s);
  const auto A = build_potential(m, gauss);
  double maxblock = 0.0;
  for (int s = 0; s < m.n_sites(); ++s)
    maxblock = std::max(maxblock,
                        potential_site_block(m, gauss, s).operatorNorm());
  CHECK(A.matrix().operatorNorm() == doctest::Approx(maxblock).epsilon(1e-10));
}

TEST_CASE("potential momentum kernel is exactly convolutional") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 9;
  m.box_length = 10.0;
  m.mass = 1.0;
  const auto profile = gaussian_well_profile(m, 0.5, 1.0, 0, 1.0, 1.0);
  const auto A = build_potential(m, profile);
  CHECK(hermiticity_defect(A.matrix()) <= 1e-12);
  // entries with equal mode displacement agree to rounding
  const int N = m.n_modes_per_axis, s = m.spinor_dim();
  for (int d = -(N - 1); d <= N - 1; ++d) {
    Matrix ref;
    bool have = false;
    for (int p = 0; p < N; ++p) {
      const int q = p - d;
      if (q < 0 || q >= N) continue;
      const Matrix blk = A.matrix().block(p * s, q * s, s, s);
      if (!have) {
        ref = blk;
        have = true;
      } else {
        CHECK((blk - ref).norm() <= 1e-10);
      }
    }
  }
}

TEST_CASE("potential rejects support touching the boundary") {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = 9;
  m.box_length = 10.0;
  m.mass = 1.0;
  PotentialProfile bad;
  bad.components.assign(1, Eigen::VectorXd::Zero(m.n_sites()));
  bad.components[0](0) = 0.7;  // on the boundary band
  bad.epsilon = 1.0;
  bad.T_adiabatic = 1.0;
  CHECK_THROWS_WITH_AS(build_potential(m, bad), doctest::Contains("boundary"),
                       std::invalid_argument);
}

TEST_CASE("switching schedule: endpoints, monotonicity, unit mass of hdot") {
  PotentialProfile p;
  p.epsilon = 1.5;
  p.T_adiabatic = 2.0;  // window 3.0
  const auto on = switching(p, 0.5);
  CHECK(on.h == 1.0);
  CHECK(on.hdot == 0.0);
  const auto off = switching(p, -3.5);
  CHECK(off.h == 0.0);
  CHECK(off.hdot == 0.0);
  CHECK(off.hddot == 0.0);

  const auto sched = p.schedule();
  CHECK(sched.h(-3.0) == 0.0);
  CHECK(sched.h(0.0) == 1.0);
  double prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = -3.0 + 3.0 * i / 200.0;
    CHECK(sched.hdot(t) >= 0.0);
    CHECK(sched.h(t) >= prev - 1e-15);
    prev = sched.h(t);
  }

  // quadrature oracle: integral of hdot over the support is 1
  const auto& gl = gauss_legendre(64);
  double mass = 0.0;
  for (size_t i = 0; i < gl.nodes.size(); ++i)
    mass += 3.0 * gl.weights[i] * sched.hdot(-3.0 + 3.0 * gl.nodes[i]);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  // hdot is the derivative of h; hddot of hdot (finite differences)
  for (double t : {-2.5, -1.7, -0.9, -0.2}) {
    const double fd = (sched.h(t + 1e-6) - sched.h(t - 1e-6)) / 2e-6;
    CHECK(sched.hdot(t) == doctest::Approx(fd).epsilon(1e-6));
    const double fdd = (sched.hdot(t + 1e-6) - sched.hdot(t - 1e-6)) / 2e-6;
    CHECK(sched.hddot(t) == doctest::Approx(fdd).epsilon(1e-5));
    const double fddd = (sched.hddot(t + 1e-6) - sched.hddot(t - 1e-6)) / 2e-6;
    CHECK(sched.hdddot(t) == doctest::Approx(fddd).epsilon(1e-4));
  }
}

TEST_CASE("model validation") {
  LatticeModel m;
  m.n_modes_per_axis = 8;  // even
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.n_modes_per_axis = 9;
  m.spatial_dim = 2;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
