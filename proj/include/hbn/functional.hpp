#pragma once

#include <json.hpp>

#include "hbn/grid.hpp"

namespace hbn {

struct EnergyBreakdown {
  double grad_sq = 0.0;      // ||v||^2
  double weighted_l2 = 0.0;  // |rho v|_2^2
  double crit_mass = 0.0;    // |v|_{2*}^{2*}
  double q_form = 0.0;       // ||v||^2 - (lambda - lambda0)|rho v|_2^2
  double energy = 0.0;       // q_form/2 - crit_mass/2*
};

void to_json(nlohmann::json& j, const EnergyBreakdown& e);

EnergyBreakdown energy(const Field& v, double lambda);

// Solves -Delta w = (lambda - lambda0) rho^2 v.
Field K0(const Field& v, double lambda);
// Solves -Delta w = |v|^{2*-2} v.
Field Kstar(const Field& v);
// v - K0(v) - Kstar(v)
Field gradient(const Field& v, double lambda);

// Scale t* = (Q/|v|_{2*}^{2*})^{1/(2*-2)} and the retracted field t* v.
double nehari_scale(const Field& v, double lambda);
Field nehari_retract(const Field& v, double lambda);
// (1/N)(Q/|v|_{2*}^2)^{N/2}: the energy of nehari_retract(v).
double retracted_energy(const Field& v, double lambda);
// Q - |v|_{2*}^{2*}
double nehari_residual(const Field& v, double lambda);

enum class Cone { P, minusP };

struct ConeBounds {
  double lower = 0.0;
  double upper = 0.0;
  Cone side = Cone::P;
};

// Bounds on dist(v, P) (or dist(v, -P)): S^{1/2}|v^-|_{2*} <= dist <= ||v^-||.
ConeBounds cone_distance_bounds(const Field& v, Cone side);
// Reports the nearer cone (smaller upper bound).
ConeBounds cone_distance_bounds(const Field& v);

}  // namespace hbn
