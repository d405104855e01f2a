#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <limits>

#include "hbn/bubbles.hpp"
#include "hbn/errors.hpp"
#include "hbn/functional.hpp"
#include "hbn/spectrum.hpp"
#include "support.hpp"

using namespace hbn;

namespace {
// S = pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}
double sobolev_closed_form(int N) {
  return M_PI * N * (N - 2) * std::pow(std::tgamma(0.5 * N) / std::tgamma(double(N)), 2.0 / N);
}
}  // namespace

TEST_CASE("Sobolev constant against the closed form") {
  for (int N : {3, 4, 5, 6, 7}) {
    CAPTURE(N);
    CHECK(test::rel(sobolev_constant(N), sobolev_closed_form(N)) < 1e-10);
    CHECK(threshold_1(N) == doctest::Approx(std::pow(sobolev_constant(N), 0.5 * N) / N));
    CHECK(threshold_2(N) == doctest::Approx(2.0 * threshold_1(N)));
  }
  CHECK(sobolev_constant(4) == doctest::Approx(10.2604).epsilon(1e-5));
  CHECK(sobolev_constant(5) == doctest::Approx(14.8119).epsilon(1e-5));
  CHECK_THROWS_AS(sobolev_constant(2), DomainError);
}

TEST_CASE("instanton moments against the Beta function") {
  for (int N : {4, 5})
    for (int p : {N - 1, N + 1}) {
      const double full = 0.5 * boost::math::beta(0.5 * (p + 1), N - 0.5 * (p + 1));
      CHECK(test::rel(instanton_moment(N, p, 0.0), full) < 1e-10);
      CHECK(instanton_moment(N, p, 2.0) < full);
    }
}

TEST_CASE("instanton profile") {
  // U_{1,0}(0) = [N(N-2)]^{(N-2)/4}
  CHECK(instanton_value(4, 1.0, 0.0) == doctest::Approx(std::sqrt(8.0)));
  CHECK(instanton_value(5, 0.1, 0.0) == doctest::Approx(std::pow(15.0, 0.75) * std::pow(10.0, 1.5)));
  // scaling U_eps(x) = eps^{-(N-2)/2} U_1(x/eps)
  CHECK(instanton_value(4, 0.2, 0.3) == doctest::Approx(instanton_value(4, 1.0, 1.5) / 0.2));
}

TEST_CASE("instanton identities and energy quantum") {
  for (int N : {4, 5}) {
    auto g = build_radial_grid(ModelParams::make(N, 0.9), 1024, Grading::center_refined);
    const InstantonIdentities id = instanton_identities(g, 1e-3);
    CHECK(test::rel(id.grad_sq, id.s_pow) < 1e-3);
    CHECK(test::rel(id.crit_mass, id.s_pow) < 1e-3);
    CHECK(test::rel(id.crit_mass / N, threshold_1(N)) < 1e-3);
  }
}

TEST_CASE("instanton PDE residual decreases under refinement") {
  std::vector<double> res;
  for (int n : {256, 512, 1024}) {
    auto g = build_radial_grid(ModelParams::make(4, 0.5), n, Grading::center_refined);
    const Field U = instanton(BubbleParams{0.05, 0.0, Sign::plus}, g);
    const Field lap = laplacian_apply(U);
    double r = 0.0, s = 0.0;
    for (std::size_t i = 0; i + 2 < g->size(); ++i) {
      r = std::max(r, std::abs(lap[i] - std::pow(U[i], 3)));
      s = std::max(s, std::pow(U[i], 3));
    }
    res.push_back(r / s);
  }
  CHECK(res[1] < res[0]);
  CHECK(res[2] < res[1]);
  CHECK(res[2] < 1e-3);
}

TEST_CASE("smooth bump") {
  CHECK(smooth_bump(0.1, 0.25, 0.5) == 1.0);
  CHECK(smooth_bump(0.25, 0.25, 0.5) == 1.0);
  CHECK(smooth_bump(0.5, 0.25, 0.5) == 0.0);
  CHECK(smooth_bump(0.7, 0.25, 0.5) == 0.0);
  CHECK(smooth_bump(0.375, 0.25, 0.5) == doctest::Approx(0.5));
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = smooth_bump(0.25 + 0.25 * k / 100.0, 0.25, 0.5);
    CHECK(v <= prev);
    prev = v;
  }
  // C^2: one-sided second differences vanish at both ends
  const double h = 1e-4;
  // (a C^1 step would leave f''(0) h^2 ~ 1e-5 here; the cubic remainder is ~4e-9)
  CHECK(std::abs(smooth_bump(0.25 + 2 * h, 0.25, 0.5) - 2 * smooth_bump(0.25 + h, 0.25, 0.5) + 1.0) < 1e-7);
  CHECK(std::abs(smooth_bump(0.5 - 2 * h, 0.25, 0.5) - 2 * smooth_bump(0.5 - h, 0.25, 0.5)) < 1e-7);
}

TEST_CASE("capacity") {
  const int N = 4;
  const double r = 0.4;
  CHECK(capacity_profile(N, 0.05, 0.1, r) == 1.0);
  CHECK(capacity_profile(N, 0.5, 0.1, r) == 0.0);
  auto g = build_radial_grid(ModelParams::make(N, 0.5), 512, Grading::uniform);
  double prev = 1e300;
  for (double r0 : {0.2, 0.1, 0.05, 0.02}) {
    const Field psi = capacity_minimizer(CutoffParams{r, r0, CutoffProfile::capacity}, g);
    const double e = h1_inner(psi, psi);
    CHECK(e < prev);
    // the plate snaps to nodes; a shift delta moves the capacity by about (N-2) delta/r0
    const double h = 0.5 / 511;
    CHECK(test::rel(e, capacity_value(N, r0, r)) < 3.0 * h / r0);
    CHECK(psi.values().maxCoeff() <= 1.0);
    CHECK(psi.values().minCoeff() >= 0.0);
    prev = e;
  }
  const double fine = h1_norm(capacity_minimizer(CutoffParams{r, 0.02, CutoffProfile::capacity},
                                                 build_radial_grid(ModelParams::make(N, 0.5), 2048, Grading::uniform)));
  CHECK(test::rel(fine * fine, capacity_value(N, 0.02, r)) < 0.015);
  CHECK_THROWS_AS(capacity_minimizer(CutoffParams{r, 0.5, CutoffProfile::capacity}, g), PreconditionError);
  CHECK_THROWS_AS(capacity_minimizer(CutoffParams{r, 1e-5, CutoffProfile::capacity}, g), ResolutionError);
}

TEST_CASE("truncated bubbles and the Rayleigh quotient") {
  const ModelParams p = ModelParams::make(4, 0.5);
  auto g = build_radial_grid(p, 1024, Grading::center_refined);
  const SpectrumResult s = weighted_eigs(g, 0, 1);
  const double lam = 0.5 * (2.0 + s.lambdas[0]);
  const double S = sobolev_constant(4);
  for (double eps : {0.02, 0.01, 0.005}) CHECK(bubble_rayleigh(eps, lam, CutoffParams{0.5, 0.25}, g) < S);
  // larger cutoff, smaller gap at fixed eps (lambda just above lambda0 isolates the truncation effect)
  const double lam_small = 2.0 + 1e-9;
  double prev = 1e300;
  for (double outer : {0.2, 0.3, 0.4, 0.5}) {
    const double gap = std::abs(S - bubble_rayleigh(0.01, lam_small, CutoffParams{outer, 0.5 * outer}, g));
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK_THROWS_AS(truncated_bubble(BubbleParams{0.01, 0.0, Sign::plus}, CutoffParams{0.6, 0.3}, g),
                  PreconditionError);
  CHECK_THROWS_AS(truncated_bubble(BubbleParams{0.01, 0.1, Sign::plus}, CutoffParams{0.3, 0.1}, g), StructuralError);
  auto coarse = build_radial_grid(p, 64, Grading::uniform);
  CHECK_THROWS_AS(bubble_rayleigh(1e-3, lam, CutoffParams{0.5, 0.25}, coarse), ResolutionError);
  const Field minus = truncated_bubble(BubbleParams{0.05, 0.0, Sign::minus}, CutoffParams{0.5, 0.25}, g);
  CHECK(minus.values().maxCoeff() <= 0.0);
}

TEST_CASE("bubble manifold fit") {
  auto g = build_radial_grid(ModelParams::make(4, 0.9), 512, Grading::center_refined);
  const Field U = instanton(BubbleParams{0.3, 0.0, Sign::plus}, g);
  BubbleFit f = distance_to_bubble_manifold(U, Sign::plus);
  CHECK(f.dist < 1e-6 * h1_norm(U));
  CHECK(f.eps_hat == doctest::Approx(0.3).epsilon(1e-4));
  f = distance_to_bubble_manifold(-U, Sign::minus);
  CHECK(f.dist < 1e-6 * h1_norm(U));
  CHECK(distance_to_bubble_manifold(-U, Sign::plus).dist > 0.5 * h1_norm(U));
  // scaled first eigenfield: compare with a direct lattice scan
  const SpectrumResult s = weighted_eigs(g, 0, 1);
  const Field v = s.eigenfields[0] * 0.2;
  f = distance_to_bubble_manifold(v);
  double scan = std::numeric_limits<double>::infinity();
  const double e_lo = 4.0 * g->spacing_near(0.0), e_hi = 0.45;
  for (int k = 0; k <= 200; ++k) {
    const double eps = e_lo * std::pow(e_hi / e_lo, k / 200.0);
    scan = std::min(scan, h1_norm(v - instanton(BubbleParams{eps, 0.0, Sign::plus}, g)));
  }
  CHECK(f.dist <= scan * (1 + 1e-6));
  CHECK(f.dist > 0.5 * std::pow(sobolev_constant(4), 1.0));  // ||U|| = S^{N/4}
}

TEST_CASE("axisymmetric bubbles and capacity are mirror symmetric") {
  auto g = build_axisym_grid(ModelParams::make(4, 0.5), 64);
  const Field b = truncated_bubble(BubbleParams{0.05, 0.0, Sign::plus}, CutoffParams{0.4, 0.2}, g);
  const Field c = capacity_minimizer(CutoffParams{0.3, 0.05, CutoffProfile::capacity}, g);
  for (std::size_t k = 0; k < g->size(); ++k) {
    CHECK(b[g->reflect(k)] == b[k]);
    CHECK(c[g->reflect(k)] == doctest::Approx(c[k]).epsilon(1e-12));
  }
  const Field off = truncated_bubble(BubbleParams{0.05, 0.1, Sign::plus}, CutoffParams{0.3, 0.15}, g);
  const Field mirror = truncated_bubble(BubbleParams{0.05, -0.1, Sign::plus}, CutoffParams{0.3, 0.15}, g);
  for (std::size_t k = 0; k < g->size(); ++k) CHECK(off[g->reflect(k)] == mirror[k]);
}
