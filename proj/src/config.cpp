#include "hbn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "hbn/errors.hpp"

namespace hbn {

double LambdaSpec::indexed(const SpectrumResult& spec, int k) {
  if (k < 0) throw ConfigError("lambda index must be >= 0");
  if (k == 0) return spec.params.spectral_shift();
  long count = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    count += spec.degeneracies[i];
    if (count >= k) {
      if (spec.lambdas[i] > spec.complete_below())
        throw RangeError("lambda_" + std::to_string(k) + " lies beyond the computed spectrum; raise l_max/k_per_mode");
      return spec.lambdas[i];
    }
  }
  throw RangeError("lambda_" + std::to_string(k) + " is not in the computed spectrum");
}

double LambdaSpec::resolve(const SpectrumResult& spec) const {
  static const std::regex num(R"(\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*)");
  static const std::regex mid(R"(\s*mid\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*)");
  static const std::regex frac(R"(\s*frac\(\s*(\d+)\s*,\s*(\d+)\s*,\s*([-+0-9.eE]+)\s*\)\s*)");
  static const std::regex scale(R"(\s*scale\(\s*(\d+)\s*,\s*([-+0-9.eE]+)\s*\)\s*)");
  std::smatch m;
  double lam;
  if (std::regex_match(text, m, num)) {
    lam = std::stod(text);
  } else if (std::regex_match(text, m, mid)) {
    lam = 0.5 * (indexed(spec, std::stoi(m[1])) + indexed(spec, std::stoi(m[2])));
  } else if (std::regex_match(text, m, frac)) {
    const double a = indexed(spec, std::stoi(m[1])), b = indexed(spec, std::stoi(m[2]));
    lam = a + std::stod(m[3]) * (b - a);
  } else if (std::regex_match(text, m, scale)) {
    lam = std::stod(m[2]) * indexed(spec, std::stoi(m[1]));
  } else {
    throw ConfigError("lambda: cannot parse '" + text + "' (number, mid(i,j), frac(i,j,x), scale(k,c))");
  }
  if (!(lam > spec.params.spectral_shift()))
    throw ConfigError("lambda resolves to " + std::to_string(lam) + ", which is not above lambda0");
  return lam;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.model = ModelParams{4, 0.5};
  c.epsilon_list = {0.05, 0.03, 0.02, 0.01, 0.005};
  return c;
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config field '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key()))
      throw ConfigError("config field '" + (where.empty() ? "" : where + ".") + it.key() + "' is not recognised");
}

template <class T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + (where.empty() ? "" : where + ".") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + std::ptrdiff_t(upto), '\n');
    throw ConfigError("config syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  RunConfig c = defaults();
  check_keys(j, "", {"model", "grid", "lambda", "flow", "bubbles", "surface", "output_dir", "seed", "from"});

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, "model", {"dimension", "ball_radius"});
    read(m, "dimension", "model", c.model.dimension);
    read(m, "ball_radius", "model", c.model.ball_radius);
  }
  try {
    c.model = ModelParams::make(c.model.dimension, c.model.ball_radius);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'model': ") + e.what());
  }

  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"n", "grading", "beta", "l_max", "k_per_mode", "axisym_m"});
    read(g, "n", "grid", c.n);
    std::string grading = to_string(c.grading);
    read(g, "grading", "grid", grading);
    c.grading = parse_grading(grading);
    read(g, "beta", "grid", c.beta);
    read(g, "l_max", "grid", c.l_max);
    read(g, "k_per_mode", "grid", c.k_per_mode);
    read(g, "axisym_m", "grid", c.axisym_m);
  }
  if (c.n < 16) throw ConfigError("config field 'grid.n': must be >= 16");
  if (c.l_max < 0) throw ConfigError("config field 'grid.l_max': must be >= 0");
  if (c.k_per_mode < 1) throw ConfigError("config field 'grid.k_per_mode': must be >= 1");
  if (c.axisym_m < 8) throw ConfigError("config field 'grid.axisym_m': must be >= 8");

  if (j.contains("lambda")) {
    const json& l = j["lambda"];
    if (l.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << l.get<double>();
      c.lambda.text = os.str();
    } else if (l.is_string()) {
      c.lambda.text = l.get<std::string>();
    } else {
      throw ConfigError("config field 'lambda': expected a number or a string such as \"mid(0,1)\"");
    }
  }
  read(j, "from", "", c.from);
  if (c.from != "bubble" && c.from != "eigen" && c.from != "random")
    throw ConfigError("config field 'from': expected bubble, eigen or random");

  if (j.contains("flow")) {
    const json& f = j["flow"];
    check_keys(f, "flow", {"step", "max_steps", "grad_tol", "zero_tol", "energy_floor", "alpha", "d_lambda",
                           "integrator", "projection", "concentration_growth", "stall_steps"});
    read(f, "step", "flow", c.flow.step);
    read(f, "max_steps", "flow", c.flow.max_steps);
    read(f, "grad_tol", "flow", c.flow.grad_tol);
    read(f, "zero_tol", "flow", c.flow.zero_tol);
    read(f, "energy_floor", "flow", c.flow.energy_floor);
    read(f, "alpha", "flow", c.flow.alpha);
    read(f, "d_lambda", "flow", c.flow.d_lambda);
    read(f, "concentration_growth", "flow", c.flow.concentration_growth);
    read(f, "stall_steps", "flow", c.flow.stall_steps);
    std::string integ = to_string(c.flow.integrator), proj = to_string(c.flow.projection);
    read(f, "integrator", "flow", integ);
    read(f, "projection", "flow", proj);
    c.flow.integrator = parse_integrator(integ);
    c.flow.projection = parse_projection(proj);
  }
  try {
    c.flow.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field ") + e.what());
  }

  if (j.contains("bubbles")) {
    const json& b = j["bubbles"];
    check_keys(b, "bubbles", {"epsilon_list", "cutoff_outer", "cutoff_inner", "profile"});
    read(b, "epsilon_list", "bubbles", c.epsilon_list);
    read(b, "cutoff_outer", "bubbles", c.cutoff.outer_radius);
    read(b, "cutoff_inner", "bubbles", c.cutoff.inner_radius);
    std::string prof = "smooth_bump";
    read(b, "profile", "bubbles", prof);
    if (prof == "smooth_bump")
      c.cutoff.profile = CutoffProfile::smooth_bump;
    else if (prof == "capacity")
      c.cutoff.profile = CutoffProfile::capacity;
    else
      throw ConfigError("config field 'bubbles.profile': expected smooth_bump or capacity");
  }
  for (double e : c.epsilon_list)
    if (!(e > 0.0)) throw ConfigError("config field 'bubbles.epsilon_list': entries must be > 0");
  if (c.cutoff.outer_radius == 0.0) c.cutoff.outer_radius = c.model.ball_radius;
  if (c.cutoff.inner_radius == 0.0) c.cutoff.inner_radius = 0.5 * c.cutoff.outer_radius;
  if (!(c.cutoff.inner_radius > 0.0 && c.cutoff.inner_radius < c.cutoff.outer_radius &&
        c.cutoff.outer_radius <= c.model.ball_radius))
    throw ConfigError("config field 'bubbles': need 0 < cutoff_inner < cutoff_outer <= ball_radius");

  if (j.contains("surface")) {
    const json& s = j["surface"];
    check_keys(s, "surface", {"n_samples", "top_k", "kind"});
    read(s, "n_samples", "surface", c.surface_samples);
    read(s, "top_k", "surface", c.top_k);
    read(s, "kind", "surface", c.surface_kind);
  }
  if (c.surface_samples < 2) throw ConfigError("config field 'surface.n_samples': must be >= 2");
  if (c.surface_kind != "auto" && c.surface_kind != "sphere" && c.surface_kind != "joined")
    throw ConfigError("config field 'surface.kind': expected auto, sphere or joined");

  read(j, "output_dir", "", c.output_dir);
  read(j, "seed", "", c.seed);
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"model", {{"dimension", model.dimension}, {"ball_radius", model.ball_radius}}},
      {"grid",
       {{"n", n}, {"grading", to_string(grading)}, {"beta", beta}, {"l_max", l_max}, {"k_per_mode", k_per_mode},
        {"axisym_m", axisym_m}}},
      {"lambda", lambda.text},
      {"from", from},
      {"flow",
       {{"step", flow.step},
        {"max_steps", flow.max_steps},
        {"grad_tol", flow.grad_tol},
        {"zero_tol", flow.zero_tol},
        {"energy_floor", flow.energy_floor},
        {"alpha", flow.alpha},
        {"d_lambda", flow.d_lambda},
        {"integrator", to_string(flow.integrator)},
        {"projection", to_string(flow.projection)},
        {"concentration_growth", flow.concentration_growth},
        {"stall_steps", flow.stall_steps}}},
      {"bubbles",
       {{"epsilon_list", epsilon_list},
        {"cutoff_outer", cutoff.outer_radius},
        {"cutoff_inner", cutoff.inner_radius},
        {"profile", cutoff.profile == CutoffProfile::capacity ? "capacity" : "smooth_bump"}}},
      {"surface", {{"n_samples", surface_samples}, {"top_k", top_k}, {"kind", surface_kind}}},
      {"output_dir", output_dir},
      {"seed", seed}};
}

}  // namespace hbn
