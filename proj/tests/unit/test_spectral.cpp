#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gridplace/errors.hpp"
#include "gridplace/spectral.hpp"
#include "helpers.hpp"

using namespace gridplace;

namespace {

MatrixXd two_bus_laplacian() {
  MatrixXd L(2, 2);
  L << 1, -1, -1, 1;
  return L;
}

MatrixXd path_laplacian(Index n) {
  MatrixXd L = MatrixXd::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) {
    L(i, i) += 1;
    L(i + 1, i + 1) += 1;
    L(i, i + 1) -= 1;
    L(i + 1, i) -= 1;
  }
  return L;
}

MatrixXd fixture_laplacian(Topology t, Index n, std::uint64_t seed) {
  FixtureOptions o = testing::jittered_ring(n, seed);
  o.topology = t;
  o.injection_scale = 0.1;
  return testing::swing_of(make_fixture(o)).laplacian;
}

}  // namespace

TEST_CASE("weighted Laplacian") {
  const MatrixXd L = two_bus_laplacian();
  CHECK((weighted_laplacian(L, VectorXd::Ones(2)) - L).cwiseAbs().maxCoeff() == 0.0);
  CHECK((weighted_laplacian(L, VectorXd::Constant(2, 4.0)) - L / 4.0).cwiseAbs().maxCoeff() < 1e-16);
  VectorXd m(2);
  m << 1, 4;
  MatrixXd expect(2, 2);
  expect << 1, -0.5, -0.5, 0.25;
  CHECK((weighted_laplacian(L, m) - expect).cwiseAbs().maxCoeff() < 1e-16);
  CHECK_THROWS_AS(weighted_laplacian(L, VectorXd::Zero(2)), Error);
}

TEST_CASE("eigendecomposition") {
  SUBCASE("two-bus") {
    const Spectrum s = laplacian_spectrum(two_bus_laplacian());
    CHECK(s.lambda(0) == 0.0);
    CHECK(s.lambda(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.u(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(s.u(1, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
  }
  SUBCASE("complete graph") {
    const Index n = 6;
    const MatrixXd L = n * MatrixXd::Identity(n, n) - MatrixXd::Ones(n, n);
    const Spectrum s = laplacian_spectrum(L);
    for (Index a = 1; a < n; ++a) CHECK(s.lambda(a) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(s.degenerate);
    CHECK_THROWS_AS(require_nondegenerate(s), Error);
  }
  SUBCASE("disconnected") {
    MatrixXd L = MatrixXd::Zero(4, 4);
    L.topLeftCorner(2, 2) = two_bus_laplacian();
    L.bottomRightCorner(2, 2) = two_bus_laplacian();
    try {
      laplacian_spectrum(L);
      FAIL("expected MultipleZeroModes");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MultipleZeroModes);
    }
  }
  SUBCASE("asymmetric input") {
    MatrixXd L = two_bus_laplacian();
    L(0, 1) += 1e-6;
    CHECK_THROWS_AS(eigendecompose(L), Error);
  }
  SUBCASE("reconstruction, orthogonality and zero modes") {
    for (Topology t : {Topology::Ring, Topology::Star, Topology::Tree}) {
      const MatrixXd L = fixture_laplacian(t, 13, 7);
      const Spectrum s = laplacian_spectrum(L);
      const Index n = s.size();
      const MatrixXd& U = s.eigenvectors;
      CHECK((U * U.transpose() - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
      const MatrixXd back = U.transpose() * s.eigenvalues.asDiagonal() * U;
      CHECK((back - L).cwiseAbs().maxCoeff() <= 1e-9 * L.cwiseAbs().maxCoeff());
      CHECK(s.lambda(0) == 0.0);
      CHECK((U.row(0).array() - 1.0 / std::sqrt(double(n))).abs().maxCoeff() <= 1e-12);
      for (Index a = 1; a < n; ++a) CHECK(s.lambda(a) >= s.lambda(a - 1));
      CHECK_FALSE(s.degenerate);

      FixtureOptions o = testing::jittered_ring(13, 7);
      o.inertia_spread = 0.5;
      const VectorXd m = make_fixture(o).inertia();
      const Spectrum w = weighted_spectrum(L, m);
      const VectorXd zero = m.cwiseSqrt() / std::sqrt(m.sum());
      CHECK((w.eigenvectors.row(0).transpose() - zero).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("resistance distance") {
  const Spectrum two = laplacian_spectrum(two_bus_laplacian());
  CHECK(resistance_distance(two, 0, 0) == 0.0);
  CHECK(resistance_distance(two, 0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  const Spectrum path = laplacian_spectrum(path_laplacian(3));
  CHECK(resistance_distance(path, 0, 2) == doctest::Approx(2.0).epsilon(1e-13));

  const MatrixXd L = fixture_laplacian(Topology::Ring, 9, 4);
  const Spectrum s = laplacian_spectrum(L);
  const MatrixXd omega = resistance_matrix(s);
  const MatrixXd pinv = laplacian_pseudo_inverse(L);
  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 9; ++j) {
      CHECK(omega(i, j) == doctest::Approx(omega(j, i)).epsilon(1e-14));
      if (i == j) continue;
      const double via_pinv = pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j);
      CHECK(testing::rel(omega(i, j), via_pinv) <= 1e-10);
      for (Index k = 0; k < 9; ++k) CHECK(omega(i, j) <= omega(i, k) + omega(k, j) + 1e-12);
    }
  }
}

TEST_CASE("centrality and Kirchhoff indices") {
  const Spectrum two = laplacian_spectrum(two_bus_laplacian());
  CHECK(centrality(two, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(kirchhoff_index(two, 1) == doctest::Approx(1.0).epsilon(1e-14));

  const Index n = 8;
  MatrixXd ring = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + 1) % n;
    ring(i, i) += 1;
    ring(j, j) += 1;
    ring(i, j) -= 1;
    ring(j, i) -= 1;
  }
  const Spectrum rs = laplacian_spectrum(ring);
  for (Index j = 1; j < n; ++j) CHECK(centrality(rs, j) == doctest::Approx(centrality(rs, 0)).epsilon(1e-12));

  FixtureOptions o;
  o.topology = Topology::Star;
  o.size = 7;
  const Spectrum star = laplacian_spectrum(testing::swing_of(make_fixture(o)).laplacian);
  for (Index j = 1; j < 7; ++j) CHECK(centrality(star, 0) > centrality(star, j));

  const MatrixXd L = fixture_laplacian(Topology::Tree, 10, 2);
  const Spectrum s = laplacian_spectrum(L);
  const MatrixXd omega = resistance_matrix(s);
  double pair_sum = 0.0;
  for (Index i = 0; i < 10; ++i) {
    for (Index j = i + 1; j < 10; ++j) pair_sum += omega(i, j);
  }
  CHECK(testing::rel(kirchhoff_index(s, 1), pair_sum) <= 1e-12);
  const Spectrum scaled = laplacian_spectrum(3.0 * L);
  CHECK(testing::rel(kirchhoff_index(scaled, 2), kirchhoff_index(s, 2) / 9.0) <= 1e-12);
  CHECK_THROWS_AS(kirchhoff_index(s, 0), Error);
}

TEST_CASE("slow-mode weight equals the centrality identity") {
  for (Topology t : {Topology::Ring, Topology::Star, Topology::Tree}) {
    const Spectrum s = laplacian_spectrum(fixture_laplacian(t, 11, 3));
    const double n = 11.0;
    for (Index b = 0; b < 11; ++b) {
      const double graph = 1.0 / centrality(s, b) - kirchhoff_index(s, 1) / (n * n);
      CHECK(testing::rel(slow_mode_weight(s, b), graph) <= 1e-10);
    }
  }
}

TEST_CASE("spectrum csv") {
  std::ostringstream out;
  write_spectrum_csv(out, laplacian_spectrum(two_bus_laplacian()));
  const std::string text = out.str();
  CHECK(text.rfind("lambda,u0,u1\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
