#include "hbn/geometry.hpp"

#include <cmath>

namespace hbn {

namespace {

Field scale_by_rho_power(const Field& f, double power) {
  const Grid& g = f.grid();
  const auto& r = g.radii();
  Eigen::VectorXd v = f.values();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= std::pow(conformal_factor(r[std::size_t(i)]), power);
  return Field::wrap(f.grid_ptr(), std::move(v), f.mode());
}

}  // namespace

Field transform_u_to_v(const Field& u) {
  return scale_by_rho_power(u, 0.5 * (u.grid().params().dimension - 2));
}

Field transform_v_to_u(const Field& v) {
  return scale_by_rho_power(v, -0.5 * (v.grid().params().dimension - 2));
}

double hyperbolic_energy(const Field& u) {
  const int N = u.grid().params().dimension;
  const double* a = u.values().data();
  return u.grid().dirichlet_form(a, a, u.mode(), [N](double r) { return std::pow(conformal_factor(r), N - 2); });
}

}  // namespace hbn
