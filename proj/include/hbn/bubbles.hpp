#pragma once

#include <string>

#include "hbn/grid.hpp"

namespace hbn {

enum class Sign { plus, minus };
enum class CutoffProfile { smooth_bump, capacity };

struct BubbleParams {
  double epsilon = 0.1;
  double center_offset = 0.0;  // along the z axis
  Sign sign = Sign::plus;
};

struct CutoffParams {
  double outer_radius = 0.5;
  double inner_radius = 0.25;  // end of the flat region (bump) or the condenser plate (capacity)
  CutoffProfile profile = CutoffProfile::smooth_bump;
};

// [N(N-2)]^{(N-2)/4} (eps/(eps^2+d^2))^{(N-2)/2}
double instanton_value(int dimension, double eps, double dist);
Field instanton(const BubbleParams& b, GridPtr grid);

// int_a^inf r^p (1+r^2)^{-N} dr; p = N+1 gives the gradient moment, p = N-1 the critical one.
double instanton_moment(int dimension, int p, double a);

// Best Sobolev constant from quadrature of the unit instanton (cached).
double sobolev_constant(int dimension);
// (1/N) S^{N/2} and (2/N) S^{N/2}
double threshold_1(int dimension);
double threshold_2(int dimension);

// C^2 quintic step: 1 on [0, inner], 0 from outer on.
double smooth_bump(double d, double inner, double outer);
// min(1, (d^{2-N} - r^{2-N})/(r0^{2-N} - r^{2-N})), clamped to 0 beyond r.
double capacity_profile(int dimension, double d, double r0, double r);
// (N-2) omega / (r0^{2-N} - r^{2-N})
double capacity_value(int dimension, double r0, double r);

// Discrete condenser potential: 1 where |x - y| <= r0, 0 where |x - y| >= r, discretely harmonic between.
Field capacity_minimizer(const CutoffParams& cut, GridPtr grid, double center_offset = 0.0);

// Throws ResolutionError when eps < 4 * local mesh width at the bubble centre.
void require_resolved(const Grid& grid, double eps, double center_offset = 0.0);

Field truncated_bubble(const BubbleParams& b, const CutoffParams& cut, GridPtr grid);

// (||phi||^2 - (lambda - lambda0)|rho phi|^2) / |phi|_{2*}^2 for phi = cutoff * U_eps
double bubble_rayleigh(double eps, double lambda, const CutoffParams& cut, GridPtr grid);

struct BubbleFit {
  double dist;
  double eps_hat;
  double offset_hat;
  std::string diagnostic;
};

// min over eps > 0 and axial offset of ||v - sign*U_{eps,y}|| (offset fixed at 0 on radial grids).
BubbleFit distance_to_bubble_manifold(const Field& v, Sign sign = Sign::plus);

// Nodal instanton on a radial grid with the boundary value kept, plus analytic exterior tails.
struct InstantonIdentities {
  double grad_sq;    // grid part + tail
  double crit_mass;  // grid part + tail
  double grad_tail;
  double crit_tail;
  double s_pow;      // S^{N/2}
};
InstantonIdentities instanton_identities(const std::shared_ptr<const RadialGrid>& grid, double eps);

}  // namespace hbn
