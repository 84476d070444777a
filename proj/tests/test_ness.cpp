#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dynamics.hpp"
#include "model.hpp"
#include "ness.hpp"
#include "test_util.hpp"

using namespace fkms;

namespace {

struct WellSetup {
  LatticeModel model;
  HermitianOperator D;
  HermitianOperator K;
};

// attractive electric well; strong couplings pull eigenvalues into the gap
WellSetup well_setup(double amplitude, int modes = 13) {
  LatticeModel m;
  m.spatial_dim = 1;
  m.n_modes_per_axis = modes;
  m.box_length = 12.0;
  m.mass = 1.0;
  auto profile = gaussian_well_profile(m, amplitude, 1.5, 0, 1.0, 1.0);
  auto D = build_dirac(m);
  auto A = build_potential(m, profile);
  auto io = compute_K(D, A, profile.schedule(), 5e-3);
  return WellSetup{m, std::move(D), std::move(io.K)};
}

}  // namespace

TEST_CASE("bound states: free operator has none; weak K has none") {
  auto s = well_setup(0.0);
  const auto gap = bound_states(s.D, s.K, 1.0);
  CHECK(gap.gap_eigenvalues.empty());
  CHECK((gap.quasi_continuum_projector -
         Matrix::Identity(s.D.dim(), s.D.dim())).operatorNorm() <= 1e-14);

  // perturbation bound: |lam_i(D+K) - lam_i(D)| <= |K|. The free lattice
  // spectrum touches the gap edges at k = 0, so a weak well may pull those
  // modes slightly inside, but never deeper than |K|.
  auto weak = well_setup(0.05);
  const double knorm = weak.K.matrix().operatorNorm();
  REQUIRE(knorm < 0.5);
  for (double sgap : bound_states(weak.D, weak.K, 1.0).gap_eigenvalues) {
    CHECK(std::abs(sgap) >= 1.0 - knorm - 1e-12);
  }
}

TEST_CASE("bound states: count grows with the coupling strength") {
  std::vector<size_t> counts;
  for (double amp : {-0.4, -0.9, -1.6}) {
    auto s = well_setup(amp);
    counts.push_back(bound_states(s.D, s.K, 1.0).gap_eigenvalues.size());
  }
  CHECK(counts[0] >= 1);
  for (size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
  CHECK(counts.back() > counts.front());
}

TEST_CASE("ergodic covariance: commuting cases keep F_-(D)") {
  testutil::Rng rng(5);
  HermitianOperator D(rng.hermitian_opnorm(10, 2.5));
  const Matrix FD = fermi_factor(D, 1.0, FermiSign::minus).matrix();

  HermitianOperator K0(Matrix::Zero(10, 10));
  const auto e0 = ergodic_covariance(D, K0, 1.0);
  CHECK((e0.matrix() - FD).operatorNorm() <= 1e-12);

  // [D, K] = 0: any function of D
  const auto Kc = matrix_function(D, [](double x) { return 0.2 * std::tanh(x); });
  const auto ec = ergodic_covariance(D, Kc, 1.0);
  CHECK((ec.matrix() - FD).operatorNorm() <= 1e-10);
}

TEST_CASE("ergodic covariance: commutes with D+K, preserves spectrum and trace") {
  auto s = well_setup(-0.8);
  const auto erg = ergodic_covariance(s.D, s.K, 1.0);
  HermitianOperator H(s.D.matrix() + s.K.matrix(), 1e-8);
  const double comm =
      (H.matrix() * erg.matrix() - erg.matrix() * H.matrix()).operatorNorm();
  CHECK(comm <= 1e-10 * H.matrix().operatorNorm());
  const auto sd = erg.op().spectral();
  CHECK(sd.eigenvalues(0) >= -1e-12);
  CHECK(sd.eigenvalues(erg.dim() - 1) <= 1.0 + 1e-12);
  const Matrix FD = fermi_factor(s.D, 1.0, FermiSign::minus).matrix();
  CHECK(erg.matrix().trace().real() ==
        doctest::Approx(FD.trace().real()).epsilon(1e-10));
}

TEST_CASE("finite-horizon Cesaro mean converges to the dephasing covariance") {
  auto s = well_setup(-0.7, 9);
  const auto erg = ergodic_covariance(s.D, s.K, 1.0);
  HermitianOperator H(s.D.matrix() + s.K.matrix(), 1e-8);
  const auto& sd = H.spectral();
  const Matrix FD = fermi_factor(s.D, 1.0, FermiSign::minus).matrix();
  const Matrix Ft = sd.eigenvectors.adjoint() * FD * sd.eigenvectors;

  auto cesaro = [&](double T) {
    Matrix avg = Ft;
    const int n = H.dim();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double x = (sd.eigenvalues(a) - sd.eigenvalues(b)) * T;
        Complex phi = std::abs(x) < 1e-8
                          ? Complex(1.0 - x * x / 6.0, x / 2.0)
                          : (std::polar(1.0, x) - 1.0) / Complex(0.0, x);
        avg(a, b) *= phi;
      }
    return Matrix(sd.eigenvectors * avg * sd.eigenvectors.adjoint());
  };
  const double r1 = (cesaro(50.0) - erg.matrix()).operatorNorm();
  const double r2 = (cesaro(500.0) - erg.matrix()).operatorNorm();
  const double r3 = (cesaro(5000.0) - erg.matrix()).operatorNorm();
  CHECK(r2 <= 0.3 * r1);
  CHECK(r3 <= 0.3 * r2);
}

TEST_CASE("idealized NESS covariance") {
  auto s = well_setup(-0.9);
  const auto gap = bound_states(s.D, s.K, 1.0);
  REQUIRE(!gap.gap_eigenvalues.empty());
  REQUIRE(!gap.degenerate_gap);
  const auto ideal = ness_ideal_covariance(gap, s.D, s.K, 1.0);

  HermitianOperator H(s.D.matrix() + s.K.matrix(), 1e-8);
  const double comm =
      (H.matrix() * ideal.matrix() - ideal.matrix() * H.matrix()).operatorNorm();
  CHECK(comm <= 1e-10 * H.matrix().operatorNorm());

  // bound-block occupations are the frozen free occupations
  const auto data = bound_state_data(gap, s.D, 1.0);
  const Matrix FD = fermi_factor(s.D, 1.0, FermiSign::minus).matrix();
  for (size_t j = 0; j < data.size(); ++j) {
    const Vector& phi = gap.gap_eigenvectors[j];
    const double occ = phi.dot(ideal.matrix() * phi).real();
    CHECK(occ == doctest::Approx(data[j].occupation).epsilon(1e-12));
    CHECK(data[j].occupation ==
          doctest::Approx(phi.dot(FD * phi).real()).epsilon(1e-12));
    CHECK(data[j].occupation == doctest::Approx(fermi_scalar(data[j].d)));
    CHECK(data[j].k == doctest::Approx(data[j].d - data[j].s));
    CHECK(std::abs(data[j].s) < 1.0);
  }

  // no bound states: the covariance is exactly F_-(D+K). The free spectrum
  // must sit away from the gap edges for a weak K to leave the gap empty.
  testutil::Rng rng(91);
  HermitianOperator D0(rng.hermitian_opnorm(10, 3.0));
  const auto Dw = matrix_function(
      D0, [](double x) { return x + (x >= 0.0 ? 1.2 : -1.2); });
  HermitianOperator Kw(rng.hermitian_opnorm(10, 0.05));
  const auto gap_w = bound_states(Dw, Kw, 1.0);
  REQUIRE(gap_w.gap_eigenvalues.empty());
  const auto ideal_w = ness_ideal_covariance(gap_w, Dw, Kw, 1.0);
  HermitianOperator Hw(Dw.matrix() + Kw.matrix(), 1e-8);
  const Matrix FHw = fermi_factor(Hw, 1.0, FermiSign::minus).matrix();
  CHECK((ideal_w.matrix() - FHw).operatorNorm() <= 1e-12);
}

TEST_CASE("ness vs ergodic gap: trivial and commuting cases") {
  auto s = well_setup(0.0);
  CHECK(ness_vs_ergodic_gap(s.D, s.K, 1.0, 1.0) <= 1e-12);

  testutil::Rng rng(8);
  HermitianOperator D(rng.hermitian_opnorm(8, 2.0));
  const auto Kc = matrix_function(D, [](double x) { return 0.3 * std::sin(x); });
  const auto gap = bound_states(D, Kc, 1.0);
  const double measured = ness_vs_ergodic_gap(D, Kc, 1.0, 1.0);
  HermitianOperator H(D.matrix() + Kc.matrix(), 1e-8);
  const Matrix diff = fermi_factor(D, 1.0, FermiSign::minus).matrix() -
                      fermi_factor(H, 1.0, FermiSign::minus).matrix();
  const Matrix& Pqc = gap.quasi_continuum_projector;
  const double expected = (Pqc * diff * Pqc).operatorNorm();
  CHECK(measured == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("return to equilibrium: shrinking gaps without bound states") {
  testutil::Rng rng(12);
  HermitianOperator D0(rng.hermitian_opnorm(12, 3.0));
  const auto D = matrix_function(
      D0, [](double x) { return x + (x >= 0.0 ? 1.2 : -1.2); });
  HermitianOperator K(rng.hermitian_opnorm(12, 0.02));
  REQUIRE(bound_states(D, K, 1.0).gap_eigenvalues.empty());
  std::vector<Vector> probes{rng.unit(D.dim()), rng.unit(D.dim())};
  const auto rep = return_to_equilibrium_probe(D, K, 1.0, probes,
                                               {5.0, 50.0, 500.0}, 1.0);
  // gaps decay toward the dephasing floor, which is itself second order in K
  const auto erg = ergodic_covariance(D, K, 1.0);
  HermitianOperator H(D.matrix() + K.matrix(), 1e-8);
  const Matrix floor_op =
      erg.matrix() - fermi_factor(H, 1.0, FermiSign::minus).matrix();
  size_t pair = 0;
  for (size_t i = 0; i < probes.size(); ++i) {
    for (size_t j = 0; j < probes.size(); ++j, ++pair) {
      const auto& curve = rep.cesaro_gaps[pair];
      const double floor = std::abs(probes[i].dot(floor_op * probes[j]));
      CHECK(curve.back() <= 0.5 * curve.front() + floor + 1e-12);
      CHECK(curve.back() <= floor + 0.05 * curve.front() + 1e-12);
      CHECK(floor <= 4.0 * 0.02 * 0.02);  // dephasing floor is O(|K|^2)
    }
  }
  CHECK(rep.bound_occupations.empty());
}

TEST_CASE("return to equilibrium: conserved bound block obstructs") {
  auto s = well_setup(-0.9);
  const auto gap = bound_states(s.D, s.K, 1.0);
  REQUIRE(!gap.gap_eigenvalues.empty());
  std::vector<Vector> probes{gap.gap_eigenvectors.front()};
  const auto rep = return_to_equilibrium_probe(s.D, s.K, 1.0, probes,
                                               {10.0, 100.0, 1000.0}, 1.0);
  const double mismatch = rep.bound_mismatches.front();
  REQUIRE(mismatch > 1e-3);  // generic initial occupation is not the Fermi value
  // the diagonal matrix element keeps the occupation: persistent gap
  for (double g : rep.cesaro_gaps.front()) {
    CHECK(g == doctest::Approx(mismatch).epsilon(1e-9));
  }
}

TEST_CASE("degenerate gap eigenvalues are rejected by the idealized NESS") {
  // engineered twofold degeneracy inside the gap
  Matrix D = Matrix::Zero(4, 4), K = Matrix::Zero(4, 4);
  D.diagonal() << -2.0, -2.0, 2.0, 2.0;
  K.diagonal() << 1.5, 1.5, 0.0, 0.0;
  HermitianOperator Dh(D), Kh(K);
  const auto gap = bound_states(Dh, Kh, 1.0);
  REQUIRE(gap.degenerate_gap);
  CHECK_THROWS_WITH_AS(ness_ideal_covariance(gap, Dh, Kh, 1.0),
                       doctest::Contains("nondegenerate"), std::invalid_argument);
}
