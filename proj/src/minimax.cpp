#include "hbn/minimax.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hbn/errors.hpp"

namespace hbn {

namespace {

bool sign_definite(const Field& v) {
  const auto& x = v.values();
  return x.minCoeff() >= 0.0 || x.maxCoeff() <= 0.0;
}

// Random nonnegative smooth profile vanishing at the boundary.
Field random_positive_bumps(GridPtr grid, std::mt19937_64& rng) {
  const double R = grid->params().ball_radius;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double c[3], w[3], a[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = 0.8 * R * U(rng);
    w[k] = R * (0.1 + 0.3 * U(rng));
    a[k] = U(rng);
  }
  return Field::radial(std::move(grid), [&](double r) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += a[k] * std::exp(-std::pow((r - c[k]) / w[k], 2));
    return s * (R * R - r * r) / (R * R);
  });
}

}  // namespace

GroundState ground_state(GridPtr grid, double lambda, double lambda1, const FlowConfig& cfg, int max_restarts,
                         std::uint64_t seed, Sign sign) {
  const ModelParams& p = grid->params();
  if (!(lambda > p.spectral_shift()) || !(lambda < lambda1))
    throw DomainError("ground_state needs lambda0 < lambda < lambda1");
  const double R = p.ball_radius;
  const double sg = sign == Sign::plus ? 1.0 : -1.0;
  FlowConfig c = cfg;
  // the unprojected flow leaves the mountain-pass level; the ground state is a minimum on the Nehari set
  c.projection = Projection::nehari;

  const Field start = nehari_retract(
      truncated_bubble(BubbleParams{R / 20.0, 0.0, sign}, CutoffParams{R, R / 2.0, CutoffProfile::smooth_bump}, grid),
      lambda);
  std::mt19937_64 rng(seed);
  std::ostringstream log;
  for (int attempt = 0; attempt <= max_restarts; ++attempt) {
    Field v0 = start;
    if (attempt > 0) {
      Field pert = random_positive_bumps(grid, rng);
      v0 += pert * (sg * 0.5 * attempt * v0.values().cwiseAbs().maxCoeff() / pert.values().maxCoeff());
      v0 = nehari_retract(v0, lambda);
    }
    FlowTrace tr = run_flow(v0, lambda, c);
    log << " attempt " << attempt << ": " << to_string(tr.classification) << " (residual " << tr.final_grad_norm
        << ")";
    if (tr.classification != FlowOutcome::converged_critical || !sign_definite(tr.terminal)) continue;
    GroundState gs;
    gs.field = tr.terminal;
    const EnergyBreakdown e = energy(gs.field, lambda);
    gs.c0 = e.energy;
    gs.grad_sq = e.grad_sq;
    gs.sign_definite = true;
    gs.below_threshold = gs.c0 > 0.0 && gs.c0 < threshold_1(p.dimension);
    gs.restarts = attempt;
    gs.trace = std::move(tr);
    return gs;
  }
  throw SearchError("ground_state: no sign-definite critical point found;" + log.str());
}

// ---------------------------------------------------------------- sphere surface

namespace {

// bump(d; rho/2, rho) U_eps(d) centred on the axis
Field bubble_piece(const std::shared_ptr<const AxisymGrid>& grid, double eps, double rho, double center) {
  const int N = grid->params().dimension;
  return Field::sample(grid, [&](const NodePos& p) {
    const double d = std::hypot(p.z - center, p.s);
    const double phi = smooth_bump(d, 0.5 * rho, rho);
    return phi == 0.0 ? 0.0 : phi * instanton_value(N, eps, d);
  });
}

Field hadamard(const Field& a, const Field& b) {
  return Field::wrap(a.grid_ptr(), a.values().cwiseProduct(b.values()), a.mode());
}

Field one_minus(const Field& psi) {
  return Field::wrap(psi.grid_ptr(), (1.0 - psi.values().array()).matrix(), psi.mode());
}

bool on_nehari(const Field& v, double lambda) {
  const EnergyBreakdown e = energy(v, lambda);
  return std::abs(e.q_form - e.crit_mass) <= 1e-10 * e.grad_sq;
}

// Energy of the retraction, or +inf when the ray has no maximum.
double ray_max(const Field& v, double lambda) {
  const EnergyBreakdown e = energy(v, lambda);
  if (!(e.crit_mass > 0.0) || !(e.q_form > 0.0)) return std::numeric_limits<double>::infinity();
  return retracted_energy(v, lambda);
}

void fill_energies(SurfaceSample& s, double lambda) {
  s.energy_plus = s.plus_piece.values().any() ? energy(s.plus_piece, lambda).energy : 0.0;
  s.energy_minus = s.minus_piece.values().any() ? energy(s.minus_piece, lambda).energy : 0.0;
  s.plus_on_nehari = s.plus_piece.values().any() && on_nehari(s.plus_piece, lambda);
  s.minus_on_nehari = s.minus_piece.values().any() && on_nehari(s.minus_piece, lambda);
  s.total = energy(s.field, lambda).energy;
  s.decoupling_error = std::abs(s.total - s.energy_plus - s.energy_minus);
}

double shrunk_eps(const SphereGeometry& g, double s) {
  const double rho = (1.0 - s) * g.r + s * g.r0;
  return g.epsilon * rho / g.r;
}

}  // namespace

SphereGeometry resolve_sphere_geometry(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                       const SphereSurfaceParams& p) {
  const double Re = grid->params().ball_radius;
  SphereGeometry g{};
  g.R = p.outer_radius > 0.0 ? p.outer_radius : Re;
  g.center = p.center;
  if (std::abs(g.center) + g.R > Re * (1.0 + 1e-12)) throw PreconditionError("sphere-surface ball leaves the domain");
  g.r = g.R / 3.0;
  g.epsilon = p.epsilon > 0.0 ? p.epsilon : g.r / 8.0;
  const double h = grid->h();
  if (g.epsilon < 4.0 * h) {
    std::ostringstream os;
    os << "sphere surface in B(" << g.center << ", " << g.R << ") needs epsilon >= 4h: epsilon = " << g.epsilon
       << ", h = " << h << " (cells per radius >= " << std::ceil(4.0 * Re / g.epsilon) << ")";
    throw ResolutionError(os.str());
  }

  auto evaluate = [&](double r0, SphereGeometry& out) {
    out.r0 = r0;
    // plate grown by one cell: the bubble inside B(x, r0) and (1 - psi) v0 then share no stencil edge
    out.psi = capacity_minimizer(CutoffParams{g.r, std::min(r0 + h, 0.5 * (r0 + g.r)), CutoffProfile::capacity}, grid,
                                 g.center);
    const Field keep = one_minus(out.psi);
    double worst = 0.0;
    for (int k = 0; k <= 8; ++k) {
      const double z = 2.0 * g.r * k / 8.0;
      worst = std::max(worst, ray_max(hadamard(keep, bubble_piece(grid, g.epsilon, g.r, g.center - z)), lambda));
    }
    out.worst_truncated_energy = worst;
    out.v1_energy = ray_max(bubble_piece(grid, g.epsilon * r0 / g.r, r0, g.center), lambda);
    return std::max(out.worst_truncated_energy, out.v1_energy);
  };

  g.v0_energy = ray_max(bubble_piece(grid, g.epsilon, g.r, g.center), lambda);
  if (p.r0 > 0.0) {
    if (!(p.r0 < g.r)) throw PreconditionError("sphere surface needs r0 < r = R/3");
    evaluate(p.r0, g);
    return g;
  }
  // smallest r0 keeping the shrunken bubble resolved, and a plate of at least a few cells
  const double lo = std::max(4.0 * h * g.r / g.epsilon, 3.0 * h);
  const double hi = 0.9 * g.r;
  if (lo >= hi) {
    evaluate(std::min(lo, 0.95 * g.r), g);
    return g;
  }
  double best = std::numeric_limits<double>::infinity();
  SphereGeometry cand = g;
  constexpr int kCandidates = 10;
  for (int i = 0; i < kCandidates; ++i) {
    const double r0 = lo * std::pow(hi / lo, double(i) / (kCandidates - 1));
    const double v = evaluate(r0, cand);
    if (v < best) best = v, g = cand;
  }
  return g;
}

SurfaceSample sphere_branch(const std::shared_ptr<const AxisymGrid>& grid, double lambda, const SphereGeometry& geo,
                            double t, int direction, int branch) {
  SurfaceSample s;
  s.parameter.t = t;
  s.parameter.direction = direction;
  s.parameter.face = "sphere";
  const double d = direction >= 0 ? 1.0 : -1.0;
  const double h = grid->h();
  if (branch == 1) {
    const double sc = 2.0 - 2.0 * t;
    const double rho = (1.0 - sc) * geo.r + sc * geo.r0;
    const double eps_s = shrunk_eps(geo, sc);
    s.parameter.scale = sc;
    s.plus_piece = nehari_retract(bubble_piece(grid, eps_s, rho, geo.center + d * 2.0 * geo.r * (2.0 * t - 1.0)), lambda);
    s.minus_piece = -nehari_retract(bubble_piece(grid, geo.epsilon, geo.r, geo.center - d * 2.0 * geo.r), lambda);
    s.resolved = eps_s >= 4.0 * h && geo.epsilon >= 4.0 * h;
  } else {
    const double eps1 = shrunk_eps(geo, 1.0);
    s.parameter.scale = 1.0;
    s.plus_piece = nehari_retract(bubble_piece(grid, eps1, geo.r0, geo.center), lambda);
    const Field moving = bubble_piece(grid, geo.epsilon, geo.r, geo.center - d * 4.0 * geo.r * t);
    s.minus_piece = -nehari_retract(hadamard(one_minus(geo.psi), moving), lambda);
    s.resolved = eps1 >= 4.0 * h && geo.epsilon >= 4.0 * h;
  }
  s.field = s.plus_piece + s.minus_piece;
  fill_energies(s, lambda);
  return s;
}

std::vector<SurfaceSample> build_sphere_surface(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                                const SphereGeometry& geo, int n_samples) {
  if (n_samples < 2) throw ConfigError("sphere surface needs at least 2 samples per arc");
  if (!(lambda > grid->params().spectral_shift())) throw DomainError("sphere surface needs lambda > lambda0");
  std::vector<SurfaceSample> out;
  for (int direction : {1, -1}) {
    for (int i = 0; i < n_samples; ++i) {
      const double t = double(i) / (n_samples - 1);
      SurfaceSample s = sphere_branch(grid, lambda, geo, t, direction, t <= 0.5 ? 0 : 1);
      // the lower hemisphere is -H_N(-xi): the antipode of (t, d, +) is (t, -d, -)
      SurfaceSample a = s;
      a.parameter.direction = -direction;
      a.parameter.hemisphere = -1;
      a.field = -s.field;
      a.plus_piece = -s.minus_piece;
      a.minus_piece = -s.plus_piece;
      std::swap(a.energy_plus, a.energy_minus);
      std::swap(a.plus_on_nehari, a.minus_on_nehari);
      out.push_back(std::move(s));
      out.push_back(std::move(a));
    }
  }
  return out;
}

// ---------------------------------------------------------------- joined surface

namespace {

// Axisymmetric lift of a radial eigenfield of mode 0 or 1 (axis representative z/|x| for mode 1).
Field lift_eigenfield(const Field& e, const std::shared_ptr<const AxisymGrid>& grid) {
  const auto& r = e.grid().radii();
  const auto& v = e.values();
  const int mode = e.mode();
  if (mode > 1) throw StructuralError("joined surface supports eigenfields of angular mode 0 or 1 only");
  return Field::sample(grid, [&](const NodePos& p) {
    const double x = std::hypot(p.z, p.s);
    double f;
    if (x >= r.back()) {
      f = 0.0;
    } else if (x <= r.front()) {
      f = mode == 0 ? v[0] : v[0] * x / r.front();
    } else {
      const auto it = std::upper_bound(r.begin(), r.end(), x);
      const std::size_t j = std::size_t(it - r.begin());
      const double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
      f = (1.0 - t) * v[Eigen::Index(j - 1)] + t * v[Eigen::Index(j)];
    }
    return mode == 0 ? f : (x > 0.0 ? f * p.z / x : 0.0);
  });
}

// Largest value of Q(w)/||w||^2 over w in span(fields).
double max_normalized_q(const std::vector<Field>& fs, double lambda) {
  const std::size_t n = fs.size();
  const double gap = lambda - fs[0].grid().params().spectral_shift();
  Eigen::MatrixXd A(n, n), B(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = h1_inner(fs[i], fs[j]);
      const Field prod = Field::wrap(fs[i].grid_ptr(), fs[i].values().cwiseProduct(fs[j].values()), 0);
      double w = 0.0;
      const auto& W = fs[i].grid().weights();
      const auto& rr = fs[i].grid().radii();
      for (std::size_t k = 0; k < W.size(); ++k) w += W[k] * std::pow(conformal_factor(rr[k]), 2) * prod[k];
      A(i, j) = A(j, i) = g - gap * w;
      B(i, j) = B(j, i) = g;
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  if (es.info() != Eigen::Success) throw NumericalError("truncated eigenspace quadratic form: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

}  // namespace

JoinedSurface build_joined_surface(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                   const SpectrumResult& spec, int n_samples) {
  const ModelParams& p = grid->params();
  const double lam0 = p.spectral_shift();
  if (spec.size() == 0 || !(lambda > spec.lambdas[0]))
    throw DomainError("joined surface needs lambda > lambda_1; below it use the sphere surface");
  if (!(lambda < spec.complete_below())) throw RangeError("spectrum does not cover lambda");
  const double Re = p.ball_radius;
  const double h = grid->h();

  std::vector<Field> eig;
  double lam_n = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (spec.lambdas[k] < lambda) {
      eig.push_back(lift_eigenfield(spec.eigenfields[k], grid));
      lam_n = std::max(lam_n, spec.lambdas[k]);
    }

  JoinedSurface js;
  JoinedGeometry& g = js.geometry;
  g.n = int(eig.size());
  g.r = Re;
  g.q_ideal = 1.0 - (lambda - lam0) / (lam_n - lam0);
  const double target = 0.9 * g.q_ideal;

  auto truncated = [&](double r0, Field& psi) {
    psi = capacity_minimizer(CutoffParams{g.r, r0, CutoffProfile::capacity}, grid, 0.0);
    const Field keep = one_minus(psi);
    std::vector<Field> t;
    for (const Field& e : eig) t.push_back(hadamard(keep, e));
    return t;
  };

  // bisection for the largest r0 with Q kept at 90% of its untruncated negativity
  Field psi;
  double lo = 3.0 * h, hi = 0.5 * Re;
  if (!(max_normalized_q(truncated(lo, psi), lambda) <= target))
    throw PreconditionError("joined surface: even the smallest resolvable r0 destroys Q < 0; refine the grid");
  if (max_normalized_q(truncated(hi, psi), lambda) <= target) {
    lo = hi;
  } else {
    for (int it = 0; it < 14; ++it) {
      const double mid = 0.5 * (lo + hi);
      (max_normalized_q(truncated(mid, psi), lambda) <= target ? lo : hi) = mid;
    }
  }
  g.r0 = lo;
  const std::vector<Field> H0basis = truncated(g.r0, psi);
  g.q_truncated = max_normalized_q(H0basis, lambda);

  // bubble surface inside B(0, r0/2) and the annular bubble phi0
  g.sphere = resolve_sphere_geometry(grid, lambda, SphereSurfaceParams{0.5 * g.r0, 0.0, 0.0, 0.0});
  const double rho0 = 0.25 * g.r0;
  const Field phi0 = nehari_retract(bubble_piece(grid, rho0 / 8.0, rho0, 0.75 * g.r0), lambda);
  g.phi0_energy = energy(phi0, lambda).energy;
  const std::vector<SurfaceSample> sphere = build_sphere_surface(grid, lambda, g.sphere, n_samples);

  // a fixed eigenspace component used to test decoupling
  Field H0 = Field::zeros(grid);
  for (const Field& b : H0basis) H0 += b * (1.0 / h1_norm(b) / std::sqrt(double(H0basis.size())));

  auto emit = [&](const Field& core, SurfaceParameter par, bool resolved) {
    const EnergyBreakdown ec = energy(core, lambda);
    double zs = 1.0;
    if (ec.q_form > 0.0 && ec.crit_mass > 0.0) zs = nehari_scale(core, lambda);
    for (double zeta : {1.0, zs}) {
      for (double xi : {0.0, 1.0}) {
        SurfaceSample s;
        s.parameter = par;
        s.parameter.zeta = zeta;
        s.parameter.xi1 = xi;
        const Field bub = core * zeta;
        s.field = bub + H0 * xi;
        s.plus_piece = s.field.positive_part();
        s.minus_piece = s.field.negative_part();
        s.energy_plus = energy(s.plus_piece, lambda).energy;
        s.energy_minus = energy(s.minus_piece, lambda).energy;
        s.plus_on_nehari = s.plus_piece.values().any() && on_nehari(s.plus_piece, lambda);
        s.minus_on_nehari = s.minus_piece.values().any() && on_nehari(s.minus_piece, lambda);
        s.total = energy(s.field, lambda).energy;
        s.decoupling_error =
            std::abs(s.total - energy(bub, lambda).energy - (xi != 0.0 ? energy(H0 * xi, lambda).energy : 0.0));
        s.resolved = resolved;
        js.samples.push_back(std::move(s));
      }
    }
  };

  // eigenspace-only samples
  for (double xi : {-4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0}) {
    SurfaceSample s;
    s.parameter.face = "eigen";
    s.parameter.xi1 = xi;
    s.field = H0 * xi;
    s.plus_piece = s.field.positive_part();
    s.minus_piece = s.field.negative_part();
    s.energy_plus = energy(s.plus_piece, lambda).energy;
    s.energy_minus = energy(s.minus_piece, lambda).energy;
    s.total = energy(s.field, lambda).energy;
    js.samples.push_back(std::move(s));
  }

  for (const SurfaceSample& sp : sphere) {
    // side face s = 1: (1 - t) H^- + (1 + t) H^+
    for (int k = 0; k < 5; ++k) {
      const double tt = -1.0 + 0.5 * k;
      SurfaceParameter par = sp.parameter;
      par.face = "side";
      par.scale = tt;
      emit(sp.minus_piece * (1.0 - tt) + sp.plus_piece * (1.0 + tt), par, sp.resolved);
    }
    // top and bottom faces t = +-1: 2 s H^+ + (1 - s) phi0 and 2 s H^- - (1 - s) phi0
    for (int k = 0; k < 3; ++k) {
      const double ss = 0.5 * k;
      SurfaceParameter par = sp.parameter;
      par.scale = ss;
      par.face = "top";
      emit(sp.plus_piece * (2.0 * ss) + phi0 * (1.0 - ss), par, sp.resolved);
      par.face = "bottom";
      emit(sp.minus_piece * (2.0 * ss) - phi0 * (1.0 - ss), par, sp.resolved);
    }
  }
  return js;
}

// ---------------------------------------------------------------- levels and verification

LevelEstimate make_levels(int dimension, double c0, const std::vector<SurfaceSample>& samples) {
  LevelEstimate lv;
  lv.c0 = c0;
  lv.threshold_1 = threshold_1(dimension);
  lv.threshold_2 = threshold_2(dimension);
  lv.surface_sup = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) lv.surface_sup = std::max(lv.surface_sup, s.total);
  return lv;
}

ThresholdReport verify_thresholds(const std::vector<SurfaceSample>& samples, const LevelEstimate& levels,
                                  bool check_pieces) {
  if (samples.empty()) throw PreconditionError("verify_thresholds needs samples");
  ThresholdReport rep;
  const int N = samples.front().field.grid().params().dimension;
  const double t1 = threshold_1(N), t2 = threshold_2(N);
  rep.provenance_ok = std::abs(levels.threshold_1 - t1) <= 1e-6 * t1 && std::abs(levels.threshold_2 - t2) <= 1e-6 * t2;
  rep.surface_sup = -std::numeric_limits<double>::infinity();
  rep.min_margin_1 = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    rep.surface_sup = std::max(rep.surface_sup, s.total);
    const double m1 = t1 - std::max(s.energy_plus, s.energy_minus);
    rep.margins_1.push_back(m1);
    rep.min_margin_1 = std::min(rep.min_margin_1, m1);
    rep.resolution_flag |= !s.resolved;
  }
  rep.margin_2 = t2 - rep.surface_sup;
  rep.pass = rep.provenance_ok && rep.margin_2 > 0.0 && (!check_pieces || rep.min_margin_1 > 0.0);
  std::ostringstream os;
  if (!rep.provenance_ok) os << "threshold mismatch against the recomputed Sobolev constant; ";
  if (rep.resolution_flag) os << "some bubble scales are below 4 grid spacings; ";
  if (check_pieces && rep.min_margin_1 <= 0.0) os << "a piece reaches the one-bubble threshold; ";
  if (rep.margin_2 <= 0.0) os << "surface reaches the two-bubble threshold; ";
  rep.note = os.str();
  return rep;
}

LevelEstimate refine_from_surface(const std::vector<SurfaceSample>& samples, double lambda, const FlowConfig& cfg,
                                  int top_k, double c0) {
  if (samples.empty()) throw PreconditionError("refine_from_surface needs samples");
  const int N = samples.front().field.grid().params().dimension;
  LevelEstimate lv = make_levels(N, c0, samples);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].total > samples[b].total; });
  const double bound = 2.0 * std::pow(sobolev_constant(N), 0.5 * N);
  for (int k = 0; k < top_k && std::size_t(k) < order.size(); ++k) {
    const Field& v0 = samples[order[std::size_t(k)]].field;
    const EnergyBreakdown e0 = energy(v0, lambda);
    if (!(e0.q_form > 0.0) || !(e0.crit_mass > 0.0)) continue;
    FlowTrace tr = run_flow(v0, lambda, cfg);
    if (tr.classification != FlowOutcome::converged_critical) continue;
    const EnergyBreakdown e = energy(tr.terminal, lambda);
    const ConeBounds cp = cone_distance_bounds(tr.terminal, Cone::P);
    const ConeBounds cm = cone_distance_bounds(tr.terminal, Cone::minusP);
    lv.solution_energies.push_back(e.energy);
    lv.solution_sign_changing.push_back(cp.lower > 0.0 && cm.lower > 0.0);
    lv.solution_grad_sq.push_back(e.grad_sq);
    lv.solution_residuals.push_back(std::abs(e.q_form - e.crit_mass) / e.grad_sq);
    if (!(e.grad_sq < bound)) lv.energy_bound_held = false;
  }
  return lv;
}

}  // namespace hbn
