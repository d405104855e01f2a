#include <doctest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "hbn/errors.hpp"
#include "hbn/grid.hpp"
#include "support.hpp"

using namespace hbn;

namespace {
const ModelParams P4 = ModelParams::make(4, 0.5);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(ModelParams::make(4, 1.2), ConfigError);
  CHECK_THROWS_WITH(ModelParams::make(4, 1.2), doctest::Contains("ball_radius must be < 1"));
  CHECK_THROWS_AS(ModelParams::make(2, 0.5), ConfigError);
  CHECK_THROWS_AS(ModelParams::make(4, 0.0), ConfigError);
  CHECK(P4.spectral_shift() == 2.0);
  CHECK(ModelParams::make(5, 0.5).critical_exponent() == doctest::Approx(10.0 / 3.0));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * M_PI));
  CHECK(sphere_area(4) == doctest::Approx(2.0 * M_PI * M_PI));
  CHECK(conformal_factor(0.0) == 2.0);
  CHECK_THROWS_AS(conformal_factor(1.0), DomainError);
  CHECK_THROWS_AS(conformal_factor(-0.1), DomainError);
}

TEST_CASE("radial grid geometry") {
  for (Grading gr : {Grading::uniform, Grading::boundary_refined, Grading::center_refined}) {
    CAPTURE(to_string(gr));
    auto g = build_radial_grid(P4, 64, gr);
    const auto& r = g->radii();
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] > r[i - 1]);
    CHECK(r.back() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(g->boundary_mask().back() == 1);
    double vol = 0.0;
    for (double w : g->weights()) vol += w;
    // cells telescope to the ball volume
    CHECK(vol == doctest::Approx(sphere_area(4) * std::pow(0.5, 4) / 4.0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(build_radial_grid(P4, 8, Grading::uniform), ConfigError);
  CHECK_THROWS_AS(build_radial_grid(P4, 64, Grading::boundary_refined, 1.5), ConfigError);
  CHECK(parse_grading("center_refined") == Grading::center_refined);
  CHECK_THROWS_AS(parse_grading("chebyshev"), ConfigError);
}

TEST_CASE("stiffness is an M-matrix for every grading and mode") {
  for (Grading gr : {Grading::uniform, Grading::boundary_refined, Grading::center_refined})
    for (int mode : {0, 1, 3}) {
      auto g = build_radial_grid(P4, 48, gr);
      const auto& K = g->laplacian(mode).stiffness();
      for (int j = 0; j < K.outerSize(); ++j) {
        double rowsum = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, j); it; ++it) {
          if (it.row() == it.col())
            CHECK(it.value() > 0.0);
          else
            CHECK(it.value() <= 0.0);
          rowsum += it.value();
        }
        CHECK(rowsum >= -1e-12 * K.coeff(j, j));
      }
    }
}

TEST_CASE("Poisson solve converges at second order") {
  // quadratics are reproduced exactly by the scheme
  auto g0 = build_radial_grid(P4, 64, Grading::center_refined);
  const Field q = laplacian_solve(Field::radial(g0, [](double) { return 1.0; }));
  for (std::size_t i = 0; i < g0->size(); ++i)
    CHECK(q[i] == doctest::Approx((0.25 - g0->radii()[i] * g0->radii()[i]) / 8.0).epsilon(1e-12));
  // w = cos(k r), k R = pi/2: -Delta w = k^2 cos(k r) + 3 k sin(k r)/r in four dimensions
  const double k = M_PI;
  for (Grading gr : {Grading::uniform, Grading::boundary_refined, Grading::center_refined}) {
    CAPTURE(to_string(gr));
    std::vector<double> err;
    for (int n : {64, 128, 256}) {
      auto g = build_radial_grid(P4, n, gr);
      const Field w = laplacian_solve(
          Field::radial(g, [&](double r) { return k * k * std::cos(k * r) + 3.0 * k * std::sin(k * r) / r; }));
      double e = 0.0;
      for (std::size_t i = 0; i < g->size(); ++i) e = std::max(e, std::abs(w[i] - std::cos(k * g->radii()[i])));
      err.push_back(e);
    }
    CHECK(std::log2(err[0] / err[1]) > 1.8);
    CHECK(std::log2(err[1] / err[2]) > 1.8);
  }
}

TEST_CASE("solve and apply are inverse on unknowns") {
  auto g = build_radial_grid(P4, 100, Grading::center_refined);
  std::mt19937_64 rng(3);
  const Field f = test::smooth_field(g, rng, true);
  for (int mode : {0, 2}) {
    Field fm(g, f.values(), mode);
    const Field back = laplacian_apply(laplacian_solve(fm));
    // strong grading: roundoff times the condition number
    CHECK((back.values() - fm.values()).norm() <= 1e-8 * fm.values().norm());
  }
}

TEST_CASE("maximum principle for the discrete Laplacian") {
  auto g = build_radial_grid(P4, 128, Grading::center_refined);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const Field rhs = test::smooth_field(g, rng, false).positive_part();
    CHECK(laplacian_solve(rhs).values().minCoeff() >= 0.0);
  }
}

TEST_CASE("axisymmetric grid") {
  auto g = build_axisym_grid(P4, 32);
  CHECK(g->h() == doctest::Approx(0.5 / 32));
  for (std::size_t k = 0; k < g->size(); ++k) {
    const std::size_t m = g->reflect(k);
    CHECK(g->reflect(m) == k);
    CHECK(g->positions()[m].z == -g->positions()[k].z);
    CHECK(g->positions()[m].s == g->positions()[k].s);
    CHECK(std::hypot(g->positions()[k].z, g->positions()[k].s) < 0.5);
  }
  double vol = 0.0;
  for (double w : g->weights()) vol += w;
  CHECK(vol == doctest::Approx(sphere_area(4) * std::pow(0.5, 4) / 4.0).epsilon(0.03));
  // -Delta w = 1 again, now through the Cartesian stencil with a cut-cell boundary
  auto g2 = build_axisym_grid(P4, 64);
  const Field w = laplacian_solve(Field::sample(g2, [](const NodePos&) { return 1.0; }));
  double e = 0.0;
  for (std::size_t k = 0; k < g2->size(); ++k) {
    const auto p = g2->positions()[k];
    e = std::max(e, std::abs(w[k] - (0.25 - p.z * p.z - p.s * p.s) / 8.0));
  }
  CHECK(e < 0.02 * 0.25 / 8.0);
  CHECK_THROWS_AS(build_axisym_grid(P4, 4), ConfigError);
}

TEST_CASE("field invariants") {
  auto g = build_radial_grid(P4, 32, Grading::uniform);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(32);
  CHECK_THROWS_AS(Field(g, bad), StructuralError);
  bad[31] = 0.0;
  bad[3] = std::nan("");
  CHECK_THROWS_AS(Field(g, bad), NumericalError);
  std::mt19937_64 rng(1);
  const Field v = test::smooth_field(g, rng, true);
  CHECK((v.positive_part() + v.negative_part()).values() == v.values());
  CHECK(v.positive_part().values().minCoeff() >= 0.0);
  CHECK(v.negative_part().values().maxCoeff() <= 0.0);
  auto other = build_radial_grid(P4, 32, Grading::uniform);
  CHECK_THROWS_AS(v + Field::zeros(other), StructuralError);
  CHECK_THROWS_AS(v + Field::zeros(g, 1), StructuralError);
  CHECK(h1_inner(v, Field(g, v.values(), 1)) == 0.0);
  CHECK(h1_norm(v * 3.0) == doctest::Approx(3.0 * h1_norm(v)));
  CHECK(integrate(Field::radial(g, [](double) { return 1.0; }), Weight::one) > 0.0);
}

TEST_CASE("csv output") {
  auto g = build_radial_grid(P4, 16, Grading::uniform);
  const Field v = Field::radial(g, [](double r) { return 1.0 / 3.0 - r; });
  std::ostringstream os;
  write_csv(os, v);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "r,value");
  std::getline(is, line);
  const std::string val = line.substr(line.find(',') + 1);
  CHECK(val.size() >= 14);  // at least 12 significant digits
  std::size_t lines = 1;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 16);
  std::ostringstream ax;
  write_csv(ax, Field::zeros(build_axisym_grid(P4, 8)));
  CHECK(ax.str().rfind("z,s,value\n", 0) == 0);
}

TEST_CASE("resample_radial reproduces linear data") {
  auto a = build_radial_grid(P4, 64, Grading::uniform);
  auto b = build_radial_grid(P4, 100, Grading::boundary_refined);
  const Field v = Field::radial(a, [](double r) { return 0.5 - r; });
  const Field w = resample_radial(v, b);
  for (std::size_t i = 0; i < b->size(); ++i)
    if (b->radii()[i] >= a->radii()[0]) CHECK(w[i] == doctest::Approx(0.5 - b->radii()[i]).epsilon(1e-12));
}

TEST_CASE("factorisation cache is safe under concurrent first use") {
  auto g = build_radial_grid(P4, 256, Grading::uniform);
  std::vector<const LaplaceOperator*> seen(8);
  std::vector<std::thread> ts;
  for (int t = 0; t < 8; ++t) ts.emplace_back([&, t] { seen[std::size_t(t)] = &g->laplacian(1); });
  for (auto& t : ts) t.join();
  for (auto* p : seen) CHECK(p == seen[0]);
}
