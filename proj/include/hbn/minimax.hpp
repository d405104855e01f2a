#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hbn/bubbles.hpp"
#include "hbn/flow.hpp"
#include "hbn/spectrum.hpp"

namespace hbn {

struct GroundState {
  Field field;
  double c0 = 0.0;
  double grad_sq = 0.0;
  bool sign_definite = false;
  bool below_threshold = false;  // 0 < c0 < (1/N) S^{N/2}
  int restarts = 0;
  FlowTrace trace;
};

// Flow from a retracted truncated bubble with Nehari projection; restarts from seeded perturbations.
// Requires lambda0 < lambda < lambda1. Throws SearchError when every attempt fails.
GroundState ground_state(GridPtr grid, double lambda, double lambda1, const FlowConfig& cfg, int max_restarts = 4,
                         std::uint64_t seed = 0, Sign sign = Sign::plus);

struct SurfaceParameter {
  double t = 0.0;       // interpolation variable in [0, 1]
  int direction = 1;    // axial direction of theta
  int hemisphere = 1;   // sign of xi_{N+1}
  double scale = 0.0;   // s in rho_s = (1 - s) r + s r0 for the shrinking bubble
  double xi1 = 0.0;     // eigenspace coefficient (joined surface)
  double zeta = 1.0;    // radial extension factor (joined surface)
  std::string face;     // "sphere", "side", "top", "bottom", "eigen"
};

struct SurfaceSample {
  SurfaceParameter parameter;
  Field field;
  Field plus_piece;   // H^+ (positive part)
  Field minus_piece;  // H^- (negative part, stored with its sign)
  double energy_plus = 0.0;
  double energy_minus = 0.0;
  double total = 0.0;
  bool plus_on_nehari = false;
  bool minus_on_nehari = false;
  double decoupling_error = 0.0;  // |I(field) - I(H^+) - I(H^-)|
  bool resolved = true;           // all bubble scales >= 4 h
};

struct SphereSurfaceParams {
  double outer_radius = 0.0;  // R; the construction lives in B(0, R)
  double epsilon = 0.0;       // 0 -> r/8
  double r0 = 0.0;            // 0 -> chosen by search
  double center = 0.0;        // axial position of x
};

struct SphereGeometry {
  double R, r, epsilon, r0, center;
  double worst_truncated_energy;  // max over |z| <= 2r of I(R((1 - psi) v0(. + z)))
  double v1_energy;               // energy of the fully shrunken bubble
  double v0_energy;
  Field psi;  // capacity potential of B(center, r0) in B(center, r)
};

// Fills defaults. r0 minimises the larger of the two critical energies among resolvable values.
SphereGeometry resolve_sphere_geometry(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                       const SphereSurfaceParams& p);

// Branch formula of the intermediate map at (t, direction); branch 0 is t <= 1/2, branch 1 is t >= 1/2.
SurfaceSample sphere_branch(const std::shared_ptr<const AxisymGrid>& grid, double lambda, const SphereGeometry& geo,
                            double t, int direction, int branch);

// Samples H on the axis-restricted sphere: n_samples values of t on each of the 4 (direction, hemisphere) arcs.
std::vector<SurfaceSample> build_sphere_surface(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                                const SphereGeometry& geo, int n_samples);

struct JoinedGeometry {
  double r;                 // capacity outer radius (domain ball)
  double r0;                // hole radius
  double q_ideal;           // 1 - (lambda - lambda0)/(lambda_n - lambda0)
  double q_truncated;       // max normalized Q over the truncated eigenspace
  int n;                    // eigenspace dimension used
  SphereGeometry sphere;    // bubble surface inside B(0, r0/2)
  double phi0_energy;
};

struct JoinedSurface {
  JoinedGeometry geometry;
  std::vector<SurfaceSample> samples;
};

// Requires lambda_1 < lambda; uses the eigenfields below lambda (modes 0 and 1 supported).
JoinedSurface build_joined_surface(const std::shared_ptr<const AxisymGrid>& grid, double lambda,
                                   const SpectrumResult& spec, int n_samples);

struct LevelEstimate {
  double c0 = 0.0;
  double surface_sup = 0.0;
  double threshold_1 = 0.0;
  double threshold_2 = 0.0;
  std::vector<double> solution_energies;
  std::vector<bool> solution_sign_changing;
  std::vector<double> solution_grad_sq;
  std::vector<double> solution_residuals;  // nehari residual relative to ||v||^2
  bool energy_bound_held = true;           // grad_sq < 2 S^{N/2} for every harvested solution
};

LevelEstimate make_levels(int dimension, double c0, const std::vector<SurfaceSample>& samples);

struct ThresholdReport {
  double surface_sup = 0.0;
  double margin_2 = 0.0;
  std::vector<double> margins_1;
  double min_margin_1 = 0.0;
  bool provenance_ok = false;
  bool resolution_flag = false;  // some sample had an unresolved bubble scale
  bool pass = false;
  std::string note;
};

// check_pieces: also require every H^+/H^- energy below threshold_1 (sphere surface).
ThresholdReport verify_thresholds(const std::vector<SurfaceSample>& samples, const LevelEstimate& levels,
                                  bool check_pieces = true);

// Runs the flow from the top_k samples (by total energy) and harvests converged critical values.
LevelEstimate refine_from_surface(const std::vector<SurfaceSample>& samples, double lambda, const FlowConfig& cfg,
                                  int top_k, double c0 = 0.0);

}  // namespace hbn
