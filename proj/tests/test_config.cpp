#include <doctest.h>

#include "hbn/config.hpp"
#include "hbn/errors.hpp"

using namespace hbn;

TEST_CASE("defaults and round trip") {
  const RunConfig d = RunConfig::defaults();
  CHECK(d.model.dimension == 4);
  CHECK(d.model.ball_radius == 0.5);
  CHECK(d.lambda.text == "mid(0,1)");
  // parsing resolves the cutoff radii (zeros mean R_e and R_e/2)
  const RunConfig e = RunConfig::from_json_text("{}");
  CHECK(e.cutoff.outer_radius == 0.5);
  CHECK(e.cutoff.inner_radius == 0.25);
  const RunConfig r = RunConfig::from_json_text(e.to_json().dump());
  CHECK(r.to_json() == e.to_json());
}

TEST_CASE("field-level diagnostics") {
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"model": {"ball_radius": 1.2}})"),
                       doctest::Contains("ball_radius must be < 1"), ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"modle": {}})"), doctest::Contains("modle"), ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text(R"({"grid": {"n": "many"}})"), doctest::Contains("grid.n"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text("{\n  \"seed\": 1,\n  \"grid\": {\n    \"n\": ,\n  }\n}"),
                       doctest::Contains("line 4"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"flow": {"integrator": "rk4"}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"bubbles": {"epsilon_list": [0.1, -1]}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"surface": {"kind": "torus"}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("parsed values land in the right places") {
  const RunConfig c = RunConfig::from_json_text(R"js({
    "model": {"dimension": 5, "ball_radius": 0.6},
    "grid": {"n": 1024, "grading": "center_refined", "beta": 6, "l_max": 1},
    "lambda": "frac(0,1,0.25)",
    "flow": {"step": 0.5, "projection": "nehari", "max_steps": 10},
    "seed": 42
  })js");
  CHECK(c.model.dimension == 5);
  CHECK(c.n == 1024);
  CHECK(c.grading == Grading::center_refined);
  CHECK(c.beta == 6.0);
  CHECK(c.l_max == 1);
  CHECK(c.flow.projection == Projection::nehari);
  CHECK(c.flow.step == 0.5);
  CHECK(c.seed == 42);
}

TEST_CASE("spectral-relative lambda") {
  const ModelParams p = ModelParams::make(4, 0.5);
  const SpectrumResult s = weighted_eigs(build_radial_grid(p, 128, Grading::uniform), 2, 2);
  const double l1 = s.lambdas[0], l2 = s.lambdas[1];
  CHECK(LambdaSpec{"mid(0,1)"}.resolve(s) == doctest::Approx(0.5 * (2.0 + l1)));
  CHECK(LambdaSpec{"frac(0,1,0.25)"}.resolve(s) == doctest::Approx(2.0 + 0.25 * (l1 - 2.0)));
  CHECK(LambdaSpec{"scale(1,1.01)"}.resolve(s) == doctest::Approx(1.01 * l1));
  CHECK(LambdaSpec{" 7.5 "}.resolve(s) == 7.5);
  // lambda_2 = ... = lambda_5 is the mode-1 eigenvalue with multiplicity 4
  CHECK(LambdaSpec::indexed(s, 2) == l2);
  CHECK(LambdaSpec::indexed(s, 5) == l2);
  CHECK(LambdaSpec::indexed(s, 6) > l2);
  CHECK_THROWS_AS(LambdaSpec{"half(0,1)"}.resolve(s), ConfigError);
  CHECK_THROWS_AS(LambdaSpec{"1.5"}.resolve(s), ConfigError);
  CHECK_THROWS_AS(LambdaSpec::indexed(s, 500), RangeError);
}
