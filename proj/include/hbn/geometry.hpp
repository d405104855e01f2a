#pragma once

#include "hbn/grid.hpp"
#include "hbn/model.hpp"

namespace hbn {

// v = rho^{(N-2)/2} u
Field transform_u_to_v(const Field& u);
Field transform_v_to_u(const Field& v);

// int |grad u|^2 rho^{N-2} dx, with rho taken at cell faces.
double hyperbolic_energy(const Field& u);

}  // namespace hbn
