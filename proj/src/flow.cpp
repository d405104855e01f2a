#include "hbn/flow.hpp"

#include <algorithm>
#include <cmath>

#include "hbn/bubbles.hpp"
#include "hbn/errors.hpp"

namespace hbn {

std::string to_string(FlowOutcome o) {
  switch (o) {
    case FlowOutcome::converged_critical: return "converged_critical";
    case FlowOutcome::collapsed_to_zero: return "collapsed_to_zero";
    case FlowOutcome::bubbling_suspected: return "bubbling_suspected";
    case FlowOutcome::budget_exhausted: return "budget_exhausted";
    case FlowOutcome::energy_unbounded: return "energy_unbounded";
  }
  return "?";
}

std::string to_string(Integrator i) { return i == Integrator::exp_euler ? "exp_euler" : "explicit_euler"; }

Integrator parse_integrator(const std::string& s) {
  if (s == "exp_euler") return Integrator::exp_euler;
  if (s == "explicit_euler") return Integrator::explicit_euler;
  throw ConfigError("unknown integrator '" + s + "' (exp_euler, explicit_euler)");
}

std::string to_string(Projection p) { return p == Projection::none ? "none" : "nehari"; }

Projection parse_projection(const std::string& s) {
  if (s == "none") return Projection::none;
  if (s == "nehari") return Projection::nehari;
  throw ConfigError("unknown projection '" + s + "' (none, nehari)");
}

void FlowConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("flow.step must be > 0");
  if (max_steps < 0) throw ConfigError("flow.max_steps must be >= 0");
  if (!(grad_tol > 0.0)) throw ConfigError("flow.grad_tol must be > 0");
  if (!(zero_tol > 0.0)) throw ConfigError("flow.zero_tol must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("flow.alpha must be > 0");
  if (!(d_lambda >= 0.0)) throw ConfigError("flow.d_lambda must be >= 0");
  if (!(concentration_growth > 1.0)) throw ConfigError("flow.concentration_growth must be > 1");
  if (stall_steps < 1) throw ConfigError("flow.stall_steps must be >= 1");
}

namespace {

Field advance(const Field& v, const Field& grad, double h, Integrator integrator) {
  if (integrator == Integrator::explicit_euler) return v - grad * h;
  // K(v) = v - grad; e^{-h} v + (1 - e^{-h}) K(v) = v - (1 - e^{-h}) grad
  return v - grad * (-std::expm1(-h));
}

double concentration_of(const Field& v) {
  const double n = h1_norm(v);
  return n > 0.0 ? v.values().cwiseAbs().maxCoeff() / n : 0.0;
}

bool finite_field(const Field& v) { return v.values().allFinite(); }

}  // namespace

Field flow_step(const Field& v, double lambda, double h, Integrator integrator) {
  if (!(h > 0.0)) throw DomainError("flow_step needs h > 0");
  return advance(v, gradient(v, lambda), h, integrator);
}

FlowTrace run_flow(const Field& v0, double lambda, const FlowConfig& cfg) {
  cfg.validate();
  FlowTrace tr;
  Field v = v0;
  if (cfg.projection == Projection::nehari) {
    const EnergyBreakdown e = energy(v, lambda);
    if (e.q_form > 0.0 && e.crit_mass > 0.0) v = nehari_retract(v, lambda);
  }

  double conc0 = -1.0;
  int stall = 0;
  double fit_at_stall = -1.0;

  for (int k = 0;; ++k) {
    const EnergyBreakdown e = energy(v, lambda);
    const Field g = gradient(v, lambda);
    const double gn = h1_norm(g);
    const ConeBounds cb = cfg.cone_side ? cone_distance_bounds(v, *cfg.cone_side) : cone_distance_bounds(v);
    const double conc = concentration_of(v);
    tr.times.push_back(k * cfg.step);
    tr.energies.push_back(e.energy);
    tr.grad_norms.push_back(gn);
    tr.cone_lower.push_back(cb.lower);
    tr.cone_upper.push_back(cb.upper);
    tr.concentration.push_back(conc);
    tr.steps = k;
    tr.final_grad_norm = gn;

    if (gn < cfg.grad_tol) {
      tr.classification = FlowOutcome::converged_critical;
      break;
    }
    if (std::sqrt(e.grad_sq) < cfg.zero_tol) {
      tr.classification = FlowOutcome::collapsed_to_zero;
      break;
    }
    if (!std::isfinite(e.energy) || e.energy < cfg.energy_floor) {
      tr.classification = FlowOutcome::energy_unbounded;
      break;
    }
    if (k >= cfg.max_steps) {
      tr.classification = FlowOutcome::budget_exhausted;
      break;
    }

    // bubbling proxy: concentration grows while the residual stalls and v - w approaches the bubble manifold
    if (conc0 < 0.0 && conc > 0.0) conc0 = conc;
    stall = gn > cfg.grad_tol && k > 0 && gn >= 0.5 * tr.grad_norms[std::size_t(k - 1)] ? stall + 1 : 0;
    if (conc0 > 0.0 && conc > cfg.concentration_growth * conc0 && stall > cfg.stall_steps) {
      Field diff = cfg.weak_limit && cfg.weak_limit->compatible(v) ? v - *cfg.weak_limit : v;
      const double dn = h1_norm(diff);
      if (dn > 0.0 && v.mode() == 0) {
        const Sign sg = diff.values().sum() >= 0.0 ? Sign::plus : Sign::minus;
        const double rel = distance_to_bubble_manifold(diff, sg).dist / dn;
        if (fit_at_stall < 0.0) {
          fit_at_stall = rel;
        } else if (rel < fit_at_stall) {
          tr.classification = FlowOutcome::bubbling_suspected;
          tr.note = "relative bubble distance fell from " + std::to_string(fit_at_stall) + " to " + std::to_string(rel);
          break;
        }
      }
    }

    Field next = advance(v, g, cfg.step, cfg.integrator);
    if (!finite_field(next)) {
      tr.classification = FlowOutcome::energy_unbounded;
      tr.note = "non-finite field values";
      break;
    }
    if (cfg.projection == Projection::nehari) {
      const EnergyBreakdown en = energy(next, lambda);
      if (!(en.crit_mass > 0.0)) {
        v = next;
        tr.classification = FlowOutcome::collapsed_to_zero;
        break;
      }
      if (!(en.q_form > 0.0)) {
        // the ray through next decreases without bound
        v = next;
        tr.classification = FlowOutcome::energy_unbounded;
        tr.note = "quadratic form became non-positive; no Nehari point on the ray";
        break;
      }
      next = nehari_retract(next, lambda);
    }
    v = std::move(next);
  }
  tr.terminal = v;
  return tr;
}

ConeInvarianceReport cone_invariance_probe(const Field& v0, double lambda, double lambda1, const FlowConfig& cfg,
                                           double slack) {
  const double lam0 = v0.grid().params().spectral_shift();
  if (!(lambda > lam0) || !(lambda < lambda1))
    throw DomainError("cone invariance needs lambda0 < lambda < lambda1");
  ConeInvarianceReport rep;
  rep.side = cone_distance_bounds(v0).side;
  rep.alpha = cfg.alpha;
  rep.initial_upper = cone_distance_bounds(v0, rep.side).upper;
  if (rep.initial_upper > cfg.alpha) throw PreconditionError("initial field lies outside the alpha-tube of the cone");
  FlowConfig c = cfg;
  c.cone_side = rep.side;
  rep.trace = run_flow(v0, lambda, c);
  const auto& up = rep.trace.cone_upper;
  rep.max_upper = *std::max_element(up.begin(), up.end());
  rep.invariant_held = rep.max_upper <= cfg.alpha * (1.0 + slack);
  rep.nonincreasing = true;
  for (std::size_t i = 1; i < up.size(); ++i)
    if (up[i] > up[i - 1] * (1.0 + slack) + 1e-300) rep.nonincreasing = false;
  return rep;
}

PsReport ps_diagnostics(const FlowTrace& trace, int dimension, double alpha, double baseline) {
  PsReport r;
  r.quantum = threshold_1(dimension);
  r.collapsed = trace.classification == FlowOutcome::collapsed_to_zero;
  if (trace.energies.empty()) return r;
  r.min_cone_lower = *std::min_element(trace.cone_lower.begin(), trace.cone_lower.end());
  r.sign_changing = r.min_cone_lower >= 0.5 * alpha;
  const std::size_t n = trace.energies.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  std::vector<double> last(trace.energies.end() - std::ptrdiff_t(tail), trace.energies.end());
  std::nth_element(last.begin(), last.begin() + std::ptrdiff_t(last.size() / 2), last.end());
  r.plateau_energy = last[last.size() / 2];
  const double rel = r.plateau_energy - baseline;
  r.nearest_multiple = std::lround(rel / r.quantum);
  r.quantum_offset = rel - double(r.nearest_multiple) * r.quantum;
  r.near_quantum = r.nearest_multiple >= 1 && std::abs(r.quantum_offset) < 0.05 * r.quantum;
  r.below_first_threshold = r.plateau_energy < r.quantum;
  return r;
}

}  // namespace hbn
