#pragma once

#include <cmath>
#include <random>

#include "hbn/grid.hpp"

namespace test {

// (R^2 - r^2) * sum of three Gaussians; coefficients in [0.2, 1] or [-1, 1].
inline hbn::Field smooth_field(hbn::GridPtr g, std::mt19937_64& rng, bool signed_coeffs = false,
                               double amplitude = 1.0) {
  const double R = g->params().ball_radius;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double c[3], w[3], a[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = 0.8 * R * U(rng);
    w[k] = R * (0.1 + 0.3 * U(rng));
    a[k] = signed_coeffs ? 2.0 * U(rng) - 1.0 : 0.2 + 0.8 * U(rng);
  }
  return hbn::Field::sample(std::move(g), [&](const hbn::NodePos& p) {
    const double r = std::hypot(p.z, p.s);
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += a[k] * std::exp(-std::pow((r - c[k]) / w[k], 2));
    return amplitude * s * (R * R - r * r) / (R * R);
  });
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace test
