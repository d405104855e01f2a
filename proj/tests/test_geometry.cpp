#include <doctest.h>

#include "hbn/geometry.hpp"
#include "support.hpp"

using namespace hbn;

TEST_CASE("u <-> v transform round trip") {
  auto g = build_radial_grid(ModelParams::make(5, 0.6), 128, Grading::boundary_refined);
  std::mt19937_64 rng(11);
  const Field u = test::smooth_field(g, rng, true);
  const Field back = transform_v_to_u(transform_u_to_v(u));
  CHECK((back.values() - u.values()).norm() <= 1e-14 * u.values().norm());
  // v = rho^{3/2} u at the centre, rho(0) = 2
  const Field v = transform_u_to_v(u);
  CHECK(v[0] / u[0] == doctest::Approx(std::pow(conformal_factor(g->radii()[0]), 1.5)));
}

TEST_CASE("conformal energy identity converges under refinement") {
  // int |grad u|^2 rho^{N-2} = ||v||^2 + lambda0 |rho v|^2 up to quadrature error
  for (int N : {3, 4, 5}) {
    const ModelParams p = ModelParams::make(N, 0.5);
    std::vector<double> res;
    for (int n : {128, 256, 512}) {
      auto g = build_radial_grid(p, n, Grading::uniform);
      const Field u = Field::radial(g, [](double r) { return (0.25 - r * r) * std::exp(-std::pow((r - 0.2) / 0.1, 2)); });
      const Field v = transform_u_to_v(u);
      const double h = hyperbolic_energy(u);
      res.push_back(std::abs(h - h1_inner(v, v) - p.spectral_shift() * integrate(v, Weight::rho2, 2.0)) / h);
    }
    CAPTURE(N);
    CHECK(res[2] < 1e-5);
    CHECK(std::log2(res[1] / res[2]) > 1.7);
  }
}

TEST_CASE("hyperbolic energy of a mode field picks up the angular term") {
  auto g = build_radial_grid(ModelParams::make(4, 0.5), 128, Grading::uniform);
  const Field u0 = Field::radial(g, [](double r) { return 0.25 - r * r; });
  const Field u1(g, u0.values(), 1);
  CHECK(hyperbolic_energy(u1) > hyperbolic_energy(u0));
}
