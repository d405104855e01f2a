#include <doctest.h>

#include "hbn/bubbles.hpp"
#include "hbn/errors.hpp"
#include "hbn/functional.hpp"
#include "hbn/spectrum.hpp"
#include "support.hpp"

using namespace hbn;

namespace {

struct Setup {
  std::shared_ptr<const RadialGrid> g;
  SpectrumResult s;
  double lam;
};

Setup setup(int N = 4, double R = 0.5, int n = 256) {
  Setup x;
  x.g = build_radial_grid(ModelParams::make(N, R), n, Grading::uniform);
  x.s = weighted_eigs(x.g, 0, 2);
  x.lam = 0.5 * (x.s.params.spectral_shift() + x.s.lambdas[0]);
  return x;
}

// golden-section maximum of t -> I(t v) after a doubling bracket
double ray_max(const Field& v, double lam) {
  auto f = [&](double t) { return energy(v * t, lam).energy; };
  double b = 1.0;
  while (f(b) > 0.0) b *= 2.0;
  double a = 0.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-14 * b) {
    if (f1 < f2)
      a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = f(x2);
    else
      b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = f(x1);
  }
  return std::max(f1, f2);
}

}  // namespace

TEST_CASE("energy bookkeeping") {
  const Setup x = setup();
  std::mt19937_64 rng(1);
  const Field v = test::smooth_field(x.g, rng, true, 2.0);
  const EnergyBreakdown e = energy(v, x.lam);
  CHECK(e.grad_sq == doctest::Approx(h1_inner(v, v)).epsilon(1e-14));
  CHECK(e.q_form == doctest::Approx(e.grad_sq - (x.lam - 2.0) * e.weighted_l2).epsilon(1e-14));
  CHECK(e.energy == doctest::Approx(0.5 * e.q_form - e.crit_mass / 4.0).epsilon(1e-14));
  nlohmann::json j = e;
  CHECK(j.at("energy").get<double>() == e.energy);
  CHECK_THROWS_AS(energy(v, 2.0), DomainError);
  CHECK_THROWS_AS(energy(Field(x.g, v.values(), 1), x.lam), StructuralError);
}

TEST_CASE("gradient: zero, finite differences, small-t eigen relation") {
  const Setup x = setup();
  CHECK(h1_norm(gradient(Field::zeros(x.g), x.lam)) == 0.0);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 10; ++k) {
    const Field v = test::smooth_field(x.g, rng, false, 0.5);
    Field w = test::smooth_field(x.g, rng, false);
    w *= 4.0 / h1_norm(w);
    const double exact = h1_inner(gradient(v, x.lam), w);
    auto err = [&](double e) {
      return std::abs((energy(v + w * e, x.lam).energy - energy(v - w * e, x.lam).energy) / (2 * e) - exact);
    };
    CHECK(std::log10(err(1e-3) / err(1e-4)) > 1.9);
  }
  const Field& e1 = x.s.eigenfields[0];
  const double c = 1.0 - (x.lam - 2.0) / (x.s.lambdas[0] - 2.0);
  std::vector<double> dev;
  for (double t : {1e-2, 1e-3}) dev.push_back(h1_norm(gradient(e1 * t, x.lam) - e1 * (t * c)) / t);
  // relative deviation scales like t^{2* - 2} = t^2
  CHECK(dev[1] < 1e-6);
  CHECK(std::log10(dev[0] / dev[1]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("maximum principle and contraction") {
  const Setup x = setup();
  std::mt19937_64 rng(9);
  const double bound = (x.lam - 2.0) / (x.s.lambdas[0] - 2.0);
  for (int k = 0; k < 20; ++k) {
    const Field v = test::smooth_field(x.g, rng, false);
    CHECK(K0(v, x.lam).values().minCoeff() >= 0.0);
    CHECK(Kstar(v).values().minCoeff() >= 0.0);
    const Field a = test::smooth_field(x.g, rng, true), b = test::smooth_field(x.g, rng, true);
    CHECK(h1_norm(K0(a, x.lam) - K0(b, x.lam)) <= bound * h1_norm(a - b) * (1 + 1e-9));
  }
}

TEST_CASE("disjoint supports decouple") {
  const Setup x = setup();
  const Field f = Field::radial(x.g, [](double r) { return r < 0.2 ? std::pow(0.04 - r * r, 3) * 100 : 0.0; });
  const Field h = Field::radial(x.g, [](double r) {
    return r > 0.25 && r < 0.45 ? -std::pow((r - 0.25) * (0.45 - r), 3) * 2e5 : 0.0;
  });
  const double sum = energy(f, x.lam).energy + energy(h, x.lam).energy;
  // the only coupling is the gradient across the empty gap, which is exactly zero
  CHECK(energy(f + h, x.lam).energy == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("Nehari retraction") {
  for (int N : {3, 4, 5}) {
    CAPTURE(N);
    const Setup x = setup(N, 0.5, 128);
    std::mt19937_64 rng(13 + N);
    for (int k = 0; k < 10; ++k) {
      const Field v = test::smooth_field(x.g, rng, k % 2 == 1, 0.3 + k);
      const Field R = nehari_retract(v, x.lam);
      CHECK(std::abs(nehari_residual(R, x.lam)) < 1e-10 * h1_inner(R, R));
      CHECK(h1_norm(nehari_retract(R, x.lam) - R) < 1e-12 * h1_norm(R));
      CHECK(h1_norm(nehari_retract(v * 5.0, x.lam) - R) < 1e-12 * h1_norm(R));
      const double I = energy(R, x.lam).energy;
      CHECK(test::rel(retracted_energy(v, x.lam), I) < 1e-11);
      CHECK(test::rel(I, energy(R, x.lam).crit_mass / N) < 1e-11);
      CHECK(test::rel(I, ray_max(v, x.lam)) < 1e-9);
    }
  }
  const Setup x = setup();
  CHECK_THROWS_AS(nehari_retract(Field::zeros(x.g), x.lam), DomainError);
  // above lambda1 the first eigenfield has Q < 0
  const double above = 0.5 * (x.s.lambdas[0] + x.s.lambdas[1]);
  CHECK(energy(x.s.eigenfields[0], above).q_form < 0.0);
  CHECK_THROWS_AS(nehari_retract(x.s.eigenfields[0], above), PreconditionError);
}

TEST_CASE("cone distance bounds") {
  const Setup x = setup();
  std::mt19937_64 rng(21);
  const Field pos = test::smooth_field(x.g, rng, false);
  ConeBounds b = cone_distance_bounds(pos, Cone::P);
  CHECK(b.lower == 0.0);
  CHECK(b.upper == 0.0);
  b = cone_distance_bounds(-pos);
  CHECK(b.side == Cone::minusP);
  CHECK(b.upper == 0.0);
  CHECK(cone_distance_bounds(pos, Cone::minusP).upper == doctest::Approx(h1_norm(pos)));
  for (int k = 0; k < 20; ++k) {
    const Field v = test::smooth_field(x.g, rng, true);
    for (Cone c : {Cone::P, Cone::minusP}) {
      b = cone_distance_bounds(v, c);
      CHECK(b.lower <= b.upper * (1 + 1e-12));
    }
  }
}
