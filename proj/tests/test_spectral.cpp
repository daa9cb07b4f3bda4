#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "snls/rng.hpp"
#include "snls/spectral.hpp"

namespace snls {
namespace {

TEST_CASE("grid indexing covers modes -K..K", "[spectral]") {
  const FourierGrid g(4);
  CHECK(g.n() == 9);
  CHECK(g.size() == 9);
  for (int k = -4; k <= 4; ++k) {
    const int i = g.index_of(k);
    CHECK(i >= 0);
    CHECK(i < g.n());
    CHECK(g.mode_at(i) == k);
  }
  CHECK_THROWS_AS(g.index_of(5), std::invalid_argument);
  CHECK_THROWS_AS(g.index_of(-5), std::invalid_argument);
  CHECK_THROWS_AS(FourierGrid(-1), std::invalid_argument);
}

TEST_CASE("eigenvalues are 4 pi^2 k^2", "[spectral]") {
  CHECK(eigenvalue(0) == 0.0);
  CHECK(eigenvalue(1) == Catch::Approx(kFourPiSq).epsilon(1e-15));
  CHECK(eigenvalue(-3) == Catch::Approx(9.0 * kFourPiSq).epsilon(1e-15));
  CHECK(eigenvalue(10) == Catch::Approx(100.0 * kFourPiSq).epsilon(1e-15));
}

TEST_CASE("SobolevIndex rejects negative smoothness", "[spectral]") {
  CHECK_NOTHROW(SobolevIndex(0.0));
  CHECK_NOTHROW(SobolevIndex(2.5));
  CHECK_THROWS_AS(SobolevIndex(-0.5), std::invalid_argument);
}

TEST_CASE("l2 norm is the Euclidean norm of the coefficients", "[spectral]") {
  const FourierGrid g(3);
  SpectralField v(g);
  v.at(-2) = cplx{3.0, 0.0};
  v.at(1) = cplx{0.0, 4.0};
  CHECK(l2_norm(v) == Catch::Approx(5.0).epsilon(1e-15));

  // Parseval: the grid samples carry the same energy scaled by n
  const auto samples = to_grid(v);
  double grid_energy = 0.0;
  for (const cplx& s : samples) grid_energy += std::norm(s);
  CHECK(grid_energy / static_cast<double>(g.n()) ==
        Catch::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("sobolev norm weights modes by lambda^mu", "[spectral]") {
  const FourierGrid g(4);
  SpectralField v(g);
  v.at(0) = cplx{2.0, 0.0};
  v.at(3) = cplx{0.0, 1.0};
  const double lam3 = eigenvalue(3);
  // mode 0 enters with unit weight at every mu
  CHECK(sobolev_norm(v, SobolevIndex(2.0)) ==
        Catch::Approx(std::sqrt(4.0 + lam3 * lam3)).epsilon(1e-14));
  CHECK(sobolev_norm(v, SobolevIndex(0.0)) ==
        Catch::Approx(l2_norm(v)).epsilon(1e-15));
}

TEST_CASE("transform round-trip is the identity", "[spectral]") {
  const FourierGrid g(8);
  const GaussianStream fld = stream_for(11, StreamPurpose::test_vectors, 0);
  const SpectralField v = random_field(g, 1.0, fld);
  const SpectralField back = from_grid(to_grid(v), g);
  double defect = 0.0;
  for (int i = 0; i < v.size(); ++i)
    defect += std::abs(back.a[static_cast<std::size_t>(i)] -
                       v.a[static_cast<std::size_t>(i)]);
  CHECK(defect < 1e-12 * (1.0 + l2_norm(v)));
}

TEST_CASE("single modes transform to plane waves", "[spectral]") {
  const FourierGrid g(5);
  const auto samples = to_grid(unit_mode(g, 2));
  for (int j = 0; j < g.n(); ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(g.n());
    const cplx expect{std::cos(kTwoPi * 2.0 * x), std::sin(kTwoPi * 2.0 * x)};
    CHECK(std::abs(samples[static_cast<std::size_t>(j)] - expect) < 1e-13);
  }
}

TEST_CASE("projection splits energy by mode", "[spectral]") {
  const FourierGrid g(6);
  const GaussianStream fld = stream_for(12, StreamPurpose::test_vectors, 0);
  const SpectralField v = random_field(g, 0.5, fld);
  const SpectralField low = project(v, 2);
  for (int k = -6; k <= 6; ++k) {
    if (std::abs(k) <= 2)
      CHECK(low.at(k) == v.at(k));
    else
      CHECK(low.at(k) == cplx{});
  }
  const double a = l2_norm(low);
  const double b = l2_norm(v - low);
  CHECK(a * a + b * b == Catch::Approx(l2_norm(v) * l2_norm(v)).epsilon(1e-13));
  CHECK_THROWS_AS(project(v, 7), std::invalid_argument);
}

TEST_CASE("embedding and restriction are partial inverses", "[spectral]") {
  const FourierGrid coarse(3), fine(9);
  const GaussianStream fld = stream_for(13, StreamPurpose::test_vectors, 0);
  const SpectralField v = random_field(coarse, 0.5, fld);
  const SpectralField up = embedded(v, fine);
  CHECK(l2_norm(up) == Catch::Approx(l2_norm(v)).epsilon(1e-15));
  const SpectralField down = restricted(up, coarse);
  for (int k = -3; k <= 3; ++k) CHECK(down.at(k) == v.at(k));

  CHECK_THROWS_AS(embedded(up, coarse), std::invalid_argument);
  CHECK_THROWS_AS(restricted(v, fine), std::invalid_argument);

  // fit_to_grid picks the right direction by itself
  CHECK(fit_to_grid(v, fine).grid == fine);
  CHECK(fit_to_grid(up, coarse).grid == coarse);
}

TEST_CASE("random fields have the declared mode variances", "[spectral]") {
  const FourierGrid g(2);
  const double r = 1.0;
  const int n = 20000;
  double s_abs2[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const GaussianStream fld =
        stream_for(99, StreamPurpose::test_vectors,
                   static_cast<std::uint64_t>(i));
    const SpectralField v = random_field(g, r, fld);
    for (int k = 0; k <= 2; ++k) s_abs2[k] += std::norm(v.at(k));
  }
  // amplitude weight (1 + lambda)^-r means mode variance (1 + lambda)^-2r
  for (int k = 0; k <= 2; ++k) {
    const double expect = std::pow(1.0 + eigenvalue(k), -2.0 * r);
    CHECK(s_abs2[k] / n == Catch::Approx(expect).epsilon(0.05));
  }
}

}  // namespace
}  // namespace snls
