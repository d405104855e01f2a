#pragma once

namespace hbn {

struct ModelParams {
  int dimension = 4;
  double ball_radius = 0.5;

  // Throws ConfigError unless N >= 3 and 0 < R_e < 1.
  static ModelParams make(int dimension, double ball_radius);

  double spectral_shift() const { return dimension * (dimension - 2) / 4.0; }
  double critical_exponent() const { return 2.0 * dimension / (dimension - 2); }
};

// Poincare ball conformal factor 2/(1-r^2).
double conformal_factor(double r);

// Surface area of the unit sphere S^{N-1}.
double sphere_area(int dimension);

}  // namespace hbn
