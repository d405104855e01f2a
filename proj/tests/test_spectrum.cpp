#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>

#include "hbn/errors.hpp"
#include "hbn/functional.hpp"
#include "hbn/spectrum.hpp"
#include "support.hpp"

using namespace hbn;

namespace {
const ModelParams P4 = ModelParams::make(4, 0.5);
}

TEST_CASE("harmonic dimensions") {
  CHECK(harmonic_dimension(4, 0) == 1);
  CHECK(harmonic_dimension(4, 1) == 4);
  CHECK(harmonic_dimension(4, 2) == 9);
  CHECK(harmonic_dimension(3, 2) == 5);
  CHECK(harmonic_dimension(5, 2) == 14);
}

TEST_CASE("spectrum invariants") {
  auto g = build_radial_grid(P4, 256, Grading::boundary_refined);
  const SpectrumResult s = weighted_eigs(g, 2, 3);
  REQUIRE(s.size() == 9);
  CHECK(s.modes[0] == 0);
  CHECK(s.mus[0] > 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(s.lambdas[k] - s.mus[k] == P4.spectral_shift());
    CHECK(s.lambdas[k] > 2.0);
    if (k > 0) CHECK(s.mus[k] >= s.mus[k - 1]);
    CHECK(s.degeneracies[k] == harmonic_dimension(4, s.modes[k]));
  }
  // first eigenfield strictly positive in the interior
  const auto& e1 = s.eigenfields[0].values();
  for (Eigen::Index i = 0; i + 1 < e1.size(); ++i) CHECK(e1[i] > 0.0);
  // H-orthonormality within each mode, zero across modes by construction
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double ip = h1_inner(s.eigenfields[i], s.eigenfields[j]);
      CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
  // eigen-relation and variational characterisation
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(test::rel(rayleigh_quotient(s.eigenfields[k]), s.mus[k]) < 1e-10);
  CHECK(test::rel(rayleigh_quotient(s.eigenfields[0] * -7.0), s.mus[0]) < 1e-11);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) CHECK(rayleigh_quotient(test::smooth_field(g, rng, true)) >= s.mus[0] * (1 - 1e-12));
  CHECK_THROWS_AS(rayleigh_quotient(Field::zeros(g)), DomainError);
}

TEST_CASE("eigenvalues converge at second order") {
  std::vector<double> mu;
  for (int n : {64, 128, 256, 512}) mu.push_back(weighted_eigs(build_radial_grid(P4, n, Grading::uniform), 1, 1).mus[1]);
  const double order = std::log2((mu[1] - mu[2]) / (mu[2] - mu[3]));
  CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("small-ball limit matches the Bessel zero") {
  const double R = 0.05;
  const SpectrumResult s = weighted_eigs(build_radial_grid(ModelParams::make(4, R), 256, Grading::uniform), 0, 1);
  const double j = boost::math::cyl_bessel_j_zero(1.0, 1);
  CHECK(test::rel(s.mus[0], j * j / (4 * R * R)) < 0.02);
}

TEST_CASE("lambda1 decreases with the ball and stays above (N-1)^2/4") {
  double prev = 1e300;
  for (double R : {0.3, 0.5, 0.7, 0.9}) {
    const double l1 = weighted_eigs(build_radial_grid(ModelParams::make(4, R), 256, Grading::boundary_refined), 0, 1)
                          .lambdas[0];
    CHECK(l1 < prev);
    CHECK(l1 > 2.25);
    prev = l1;
  }
}

TEST_CASE("K0 is diagonal on eigenfields") {
  auto g = build_radial_grid(P4, 256, Grading::uniform);
  const SpectrumResult s = weighted_eigs(g, 0, 4);
  const double lam = 0.5 * (2.0 + s.lambdas[0]);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Field w = K0(s.eigenfields[k], lam);
    const double f = (lam - 2.0) / (s.lambdas[k] - 2.0);
    CHECK(h1_norm(w - s.eigenfields[k] * f) < 1e-9);
  }
}

TEST_CASE("spectral position") {
  auto g = build_radial_grid(P4, 128, Grading::uniform);
  const SpectrumResult s = weighted_eigs(g, 2, 2);
  const double l1 = s.lambdas[0], l2 = s.lambdas[1];
  auto p = spectral_position(0.5 * (2.0 + l1), s);
  CHECK(p.n == 0);
  CHECK_FALSE(p.at_eigenvalue);
  p = spectral_position(0.5 * (l1 + l2), s);
  CHECK(p.n == 1);
  for (double d : {-1e-12, 1e-12}) {
    p = spectral_position(l1 + d, s);
    CHECK(p.at_eigenvalue);
    CHECK(p.multiplicity == 1);
  }
  // lambda_2 belongs to mode 1: multiplicity 4, and n counts lambda_1 only
  p = spectral_position(l2, s);
  CHECK(p.at_eigenvalue);
  CHECK(p.multiplicity == 4);
  CHECK(p.n == 1);
  p = spectral_position(l2 * (1 + 1e-6), s);
  CHECK(p.n == 5);
  CHECK_THROWS_AS(spectral_position(2.0, s), DomainError);
  CHECK_THROWS_AS(spectral_position(1e6, s), RangeError);
}

TEST_CASE("bad spectrum requests") {
  auto g = build_radial_grid(P4, 32, Grading::uniform);
  CHECK_THROWS_AS(weighted_eigs(g, -1, 1), ConfigError);
  CHECK_THROWS_AS(weighted_eigs(g, 0, 0), ConfigError);
  CHECK_THROWS_AS(weighted_eigs(g, 0, 100), RangeError);
}
