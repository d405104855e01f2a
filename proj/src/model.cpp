#include "hbn/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hbn/errors.hpp"

namespace hbn {

ModelParams ModelParams::make(int dimension, double ball_radius) {
  if (dimension < 3) throw ConfigError("dimension must be >= 3, got " + std::to_string(dimension));
  if (!(ball_radius > 0.0)) throw ConfigError("ball_radius must be > 0");
  if (!(ball_radius < 1.0)) throw ConfigError("ball_radius must be < 1");
  return ModelParams{dimension, ball_radius};
}

double conformal_factor(double r) {
  if (!(r >= 0.0) || !(r < 1.0))
    throw DomainError("conformal_factor: r must lie in [0, 1), got " + std::to_string(r));
  return 2.0 / (1.0 - r * r);
}

double sphere_area(int dimension) {
  const double h = 0.5 * dimension;
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

}  // namespace hbn
