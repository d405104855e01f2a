// Batch driver: eigs, ground-state, flow, bubble-asymptotics, surface, verify.
// Exit codes: 0 ok, 1 numerical failure (or failed verification), 2 configuration error.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>

#include "hbn/acceptance.hpp"
#include "hbn/config.hpp"
#include "hbn/errors.hpp"
#include "hbn/minimax.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hbn;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> lmax;
  std::optional<std::string> lambda;
  std::optional<std::string> from;
};

RunConfig load(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig::defaults() : RunConfig::from_file(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.lmax) {
    if (*o.lmax < 0) throw ConfigError("--lmax must be >= 0");
    c.l_max = *o.lmax;
  }
  if (o.lambda) c.lambda.text = *o.lambda;
  if (o.from) c.from = *o.from;
  if (c.from != "bubble" && c.from != "eigen" && c.from != "random")
    throw ConfigError("--from expects bubble, eigen or random");
  fs::create_directories(c.output_dir);
  return c;
}

std::ofstream open_out(const RunConfig& c, const std::string& name) {
  std::ofstream f(fs::path(c.output_dir) / name);
  if (!f) throw Error("cannot write " + (fs::path(c.output_dir) / name).string());
  f.precision(17);
  return f;
}

json summary_base(const RunConfig& c, const std::string& command) {
  const int N = c.model.dimension;
  return {{"command", command},
          {"version", HBN_VERSION},
          {"config", c.to_json()},
          {"threshold_1", threshold_1(N)},
          {"threshold_2", threshold_2(N)},
          {"sobolev_constant", sobolev_constant(N)}};
}

void write_summary(const RunConfig& c, const json& j) { open_out(c, "summary.json") << j.dump(2) << "\n"; }

std::shared_ptr<const RadialGrid> radial(const RunConfig& c) {
  return build_radial_grid(c.model, c.n, c.grading, c.beta);
}

CutoffParams cutoff(const RunConfig& c) {
  CutoffParams k = c.cutoff;
  if (k.outer_radius <= 0.0) k.outer_radius = c.model.ball_radius;
  if (k.inner_radius <= 0.0) k.inner_radius = 0.5 * k.outer_radius;
  return k;
}

void write_trace(const RunConfig& c, const FlowTrace& tr) {
  auto f = open_out(c, "flow_trace.csv");
  f << "t,energy,grad_norm,cone_lower,cone_upper,concentration\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    f << tr.times[i] << ',' << tr.energies[i] << ',' << tr.grad_norms[i] << ',' << tr.cone_lower[i] << ','
      << tr.cone_upper[i] << ',' << tr.concentration[i] << '\n';
}

json trace_json(const FlowTrace& tr) {
  return {{"classification", to_string(tr.classification)},
          {"steps", tr.steps},
          {"final_grad_norm", tr.final_grad_norm},
          {"final_energy", tr.energies.empty() ? 0.0 : tr.energies.back()},
          {"note", tr.note}};
}

// ---------------------------------------------------------------- commands

int cmd_eigs(const RunConfig& c) {
  const SpectrumResult s = weighted_eigs(radial(c), c.l_max, c.k_per_mode);
  auto f = open_out(c, "eigs.csv");
  f << "index,ell,mu,lambda,degeneracy\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    f << k + 1 << ',' << s.modes[k] << ',' << s.mus[k] << ',' << s.lambdas[k] << ',' << s.degeneracies[k] << '\n';
  json j = summary_base(c, "eigs");
  j["lambda0"] = c.model.spectral_shift();
  j["lambda1"] = s.lambdas[0];
  j["complete_below"] = s.complete_below();
  j["count"] = s.size();
  write_summary(c, j);
  return 0;
}

int cmd_ground_state(const RunConfig& c) {
  auto g = radial(c);
  const SpectrumResult s = weighted_eigs(g, 0, 1);
  const double lam = c.lambda.resolve(s);
  const GroundState gs = ground_state(g, lam, s.lambdas[0], c.flow, 4, c.seed);
  {
    auto f = open_out(c, "ground_state.csv");
    write_csv(f, gs.field);
  }
  write_trace(c, gs.trace);
  const EnergyBreakdown e = energy(gs.field, lam);
  json j = summary_base(c, "ground-state");
  j["lambda"] = lam;
  j["lambda1"] = s.lambdas[0];
  j["c0"] = gs.c0;
  j["grad_sq"] = gs.grad_sq;
  j["grad_sq_bound"] = 2.0 * std::pow(sobolev_constant(c.model.dimension), 0.5 * c.model.dimension);
  j["sign_definite"] = gs.sign_definite;
  j["below_threshold"] = gs.below_threshold;
  j["restarts"] = gs.restarts;
  j["energy"] = e;
  j["flow"] = trace_json(gs.trace);
  write_summary(c, j);
  return 0;
}

Field initial_field(const RunConfig& c, GridPtr g, const SpectrumResult& s, double lam) {
  const double R = c.model.ball_radius;
  if (c.from == "eigen") return s.eigenfields[0] * 0.1;
  if (c.from == "random") {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double a = U(rng), ctr = 0.6 * R * U(rng), w = R * (0.15 + 0.2 * U(rng));
    return Field::radial(std::move(g), [&](double r) {
      return (0.5 + a) * (R * R - r * r) / (R * R) * std::exp(-std::pow((r - ctr) / w, 2));
    });
  }
  const double eps = c.epsilon_list.empty() ? R / 20.0 : c.epsilon_list.front();
  Field b = truncated_bubble(BubbleParams{eps, 0.0, Sign::plus}, cutoff(c), std::move(g));
  const EnergyBreakdown e = energy(b, lam);
  return e.q_form > 0.0 ? nehari_retract(b, lam) : b;
}

int cmd_flow(const RunConfig& c) {
  auto g = radial(c);
  const SpectrumResult s = weighted_eigs(g, 0, 1);
  const double lam = c.lambda.resolve(s);
  const Field v0 = initial_field(c, g, s, lam);
  const FlowTrace tr = run_flow(v0, lam, c.flow);
  write_trace(c, tr);
  {
    auto f = open_out(c, "terminal.csv");
    write_csv(f, tr.terminal);
  }
  const PsReport ps = ps_diagnostics(tr, c.model.dimension, c.flow.alpha);
  json j = summary_base(c, "flow");
  j["lambda"] = lam;
  j["lambda1"] = s.lambdas[0];
  j["flow"] = trace_json(tr);
  j["ps"] = {{"sign_changing", ps.sign_changing},     {"min_cone_lower", ps.min_cone_lower},
             {"plateau_energy", ps.plateau_energy},   {"nearest_multiple", ps.nearest_multiple},
             {"quantum_offset", ps.quantum_offset},   {"near_quantum", ps.near_quantum},
             {"below_first_threshold", ps.below_first_threshold}};
  write_summary(c, j);
  return 0;
}

int cmd_bubble_asymptotics(const RunConfig& c) {
  auto g = radial(c);
  const SpectrumResult s = weighted_eigs(g, 0, 1);
  const double lam = c.lambda.resolve(s);
  const int N = c.model.dimension;
  const double S = sobolev_constant(N);
  const CutoffParams cut = cutoff(c);
  auto f = open_out(c, "bubble_asymptotics.csv");
  // scaled_slope normalises by t = eps^2 (N >= 5) or t |ln t| (N = 4); literal_slope uses eps itself
  f << "epsilon,quotient,S_minus_quotient,scaled_slope,literal_slope\n";
  json rows = json::array(), skipped = json::array();
  for (double eps : c.epsilon_list) {
    double q;
    try {
      q = bubble_rayleigh(eps, lam, cut, g);
    } catch (const ResolutionError& e) {
      skipped.push_back({{"epsilon", eps}, {"reason", e.what()}});
      continue;
    }
    const double gap = S - q, t = eps * eps;
    const double scaled = N == 4 ? gap / (t * std::abs(std::log(t))) : gap / t;
    const double literal = N == 4 ? gap / (eps * std::abs(std::log(eps))) : gap / eps;
    f << eps << ',' << q << ',' << gap << ',' << scaled << ',' << literal << '\n';
    rows.push_back({{"epsilon", eps}, {"quotient", q}, {"below_S", q < S}});
  }
  json j = summary_base(c, "bubble-asymptotics");
  j["lambda"] = lam;
  j["rows"] = rows;
  j["skipped_unresolved"] = skipped;
  write_summary(c, j);
  return 0;
}

int cmd_surface(const RunConfig& c) {
  auto rg = radial(c);
  const SpectrumResult s = weighted_eigs(rg, c.l_max, c.k_per_mode);
  const double lam = c.lambda.resolve(s);
  auto ag = build_axisym_grid(c.model, c.axisym_m);
  std::string kind = c.surface_kind;
  if (kind == "auto") kind = lam < s.lambdas[0] ? "sphere" : "joined";
  std::vector<SurfaceSample> samples;
  json geo;
  if (kind == "sphere") {
    const SphereGeometry g = resolve_sphere_geometry(ag, lam, SphereSurfaceParams{});
    samples = build_sphere_surface(ag, lam, g, c.surface_samples);
    geo = {{"R", g.R}, {"r", g.r}, {"epsilon", g.epsilon}, {"r0", g.r0}, {"v0_energy", g.v0_energy},
           {"v1_energy", g.v1_energy}, {"worst_truncated_energy", g.worst_truncated_energy}};
  } else {
    const JoinedSurface js = build_joined_surface(ag, lam, s, c.surface_samples);
    samples = js.samples;
    geo = {{"r", js.geometry.r}, {"r0", js.geometry.r0}, {"n", js.geometry.n}, {"q_ideal", js.geometry.q_ideal},
           {"q_truncated", js.geometry.q_truncated}, {"phi0_energy", js.geometry.phi0_energy}};
  }
  const int N = c.model.dimension;
  LevelEstimate lv = c.top_k > 0 ? refine_from_surface(samples, lam, c.flow, c.top_k) : make_levels(N, 0.0, samples);
  const ThresholdReport rep = verify_thresholds(samples, lv, kind == "sphere");
  const double t1 = threshold_1(N), t2 = threshold_2(N);
  auto f = open_out(c, "surface.csv");
  f << "t,sign,energy_plus,energy_minus,total,margin_1,margin_2,direction,face,scale,xi1,zeta,resolved\n";
  for (const auto& smp : samples) {
    const auto& p = smp.parameter;
    f << p.t << ',' << p.hemisphere << ',' << smp.energy_plus << ',' << smp.energy_minus << ',' << smp.total << ','
      << t1 - std::max(smp.energy_plus, smp.energy_minus) << ',' << t2 - smp.total << ',' << p.direction << ','
      << p.face << ',' << p.scale << ',' << p.xi1 << ',' << p.zeta << ',' << int(smp.resolved) << '\n';
  }
  json j = summary_base(c, "surface");
  j["lambda"] = lam;
  j["kind"] = kind;
  j["geometry"] = geo;
  j["levels"] = {{"c0", lv.c0},
                 {"surface_sup", lv.surface_sup},
                 {"threshold_1", lv.threshold_1},
                 {"threshold_2", lv.threshold_2},
                 {"solution_energies", lv.solution_energies},
                 {"solution_sign_changing", lv.solution_sign_changing},
                 {"solution_grad_sq", lv.solution_grad_sq},
                 {"solution_residuals", lv.solution_residuals},
                 {"energy_bound_held", lv.energy_bound_held}};
  j["verification"] = {{"pass", rep.pass},
                       {"margin_2", rep.margin_2},
                       {"min_margin_1", rep.min_margin_1},
                       {"provenance_ok", rep.provenance_ok},
                       {"resolution_flag", rep.resolution_flag},
                       {"note", rep.note}};
  write_summary(c, j);
  return 0;
}

int cmd_verify(const RunConfig& c, bool seed_given, const std::vector<int>& only) {
  AcceptanceOptions opt;
  if (seed_given) opt.seed = c.seed;
  opt.only = only;
  json all = json::array();
  int failed = 0;
  run_acceptance(opt, [&](const CriterionResult& r) {
    std::printf("[%s] criterion %2d %-36s %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.summary.c_str());
    std::fflush(stdout);
    failed += !r.pass;
    all.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"summary", r.summary},
                   {"seconds", r.seconds}, {"details", r.details}});
  });
  json j = summary_base(c, "verify");
  j["seed"] = opt.seed;
  j["criteria"] = all;
  j["failed"] = failed;
  write_summary(c, j);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperbolic Brezis-Nirenberg toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "seed for random probe fields");
  app.add_option("--lmax", o.lmax, "largest angular mode");
  app.add_option("--lambda", o.lambda, "lambda: number, mid(i,j), frac(i,j,x) or scale(k,c)");
  app.add_option("--from", o.from, "flow start: bubble, eigen or random");
  app.set_version_flag("--version", std::string(HBN_VERSION));

  auto* eigs = app.add_subcommand("eigs", "weighted Dirichlet spectrum per angular mode");
  auto* gs = app.add_subcommand("ground-state", "positive ground state on the Nehari set");
  auto* flow = app.add_subcommand("flow", "negative gradient flow from a chosen start");
  auto* ba = app.add_subcommand("bubble-asymptotics", "truncated-bubble quotient against S");
  auto* surf = app.add_subcommand("surface", "sphere or joined surface energies");
  auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
  std::vector<int> only;
  ver->add_option("--only", only, "criterion ids")->check(CLI::Range(1, kCriterionCount));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const RunConfig c = load(o);
    if (eigs->parsed()) return cmd_eigs(c);
    if (gs->parsed()) return cmd_ground_state(c);
    if (flow->parsed()) return cmd_flow(c);
    if (ba->parsed()) return cmd_bubble_asymptotics(c);
    if (surf->parsed()) return cmd_surface(c);
    if (ver->parsed()) return cmd_verify(c, o.seed.has_value(), only);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
