#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hbn/functional.hpp"
#include "hbn/grid.hpp"

namespace hbn {

enum class Integrator { exp_euler, explicit_euler };
// nehari: rescale onto the Nehari manifold after every step.
enum class Projection { none, nehari };
enum class FlowOutcome { converged_critical, collapsed_to_zero, bubbling_suspected, budget_exhausted, energy_unbounded };

std::string to_string(FlowOutcome o);
std::string to_string(Integrator i);
Integrator parse_integrator(const std::string& s);
Projection parse_projection(const std::string& s);
std::string to_string(Projection p);

struct FlowConfig {
  double step = 1.0;
  int max_steps = 2000;
  double grad_tol = 1e-8;
  double zero_tol = 1e-6;
  double energy_floor = -1e6;
  double alpha = 0.1;
  double d_lambda = 0.0;  // monitoring only
  Integrator integrator = Integrator::exp_euler;
  Projection projection = Projection::none;
  double concentration_growth = 10.0;
  int stall_steps = 100;
  std::optional<Field> weak_limit;  // estimate subtracted before the bubble fit
  std::optional<Cone> cone_side;    // record bounds for this cone instead of the nearer one

  void validate() const;
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> grad_norms;
  std::vector<double> cone_lower;
  std::vector<double> cone_upper;
  std::vector<double> concentration;
  Field terminal;
  FlowOutcome classification = FlowOutcome::budget_exhausted;
  int steps = 0;
  double final_grad_norm = 0.0;
  std::string note;
};

Field flow_step(const Field& v, double lambda, double h, Integrator integrator = Integrator::exp_euler);

FlowTrace run_flow(const Field& v0, double lambda, const FlowConfig& cfg);

struct ConeInvarianceReport {
  Cone side = Cone::P;
  double alpha = 0.0;
  double initial_upper = 0.0;
  double max_upper = 0.0;
  bool invariant_held = false;  // max_upper <= alpha (1 + slack)
  bool nonincreasing = false;
  FlowTrace trace;
};

// Requires lambda0 < lambda < lambda1 and cone_upper(v0) <= alpha.
ConeInvarianceReport cone_invariance_probe(const Field& v0, double lambda, double lambda1, const FlowConfig& cfg,
                                           double slack = 1e-9);

struct PsReport {
  bool sign_changing = false;  // cone lower bounds stayed >= alpha/2 throughout
  double min_cone_lower = 0.0;
  double plateau_energy = 0.0;
  double quantum = 0.0;         // (1/N) S^{N/2}
  long nearest_multiple = 0;    // of the quantum, measured from the baseline
  double quantum_offset = 0.0;  // plateau - baseline - nearest_multiple * quantum
  bool near_quantum = false;    // |offset| < 5% of the quantum with nearest_multiple >= 1
  bool below_first_threshold = false;
  bool collapsed = false;
};

// Plateau is the median energy over the last tenth of the trace.
PsReport ps_diagnostics(const FlowTrace& trace, int dimension, double alpha, double baseline = 0.0);

}  // namespace hbn
