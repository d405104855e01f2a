#include "hbn/functional.hpp"

#include <cmath>


#include "hbn/bubbles.hpp"
#include "hbn/errors.hpp"

namespace hbn {

void to_json(nlohmann::json& j, const EnergyBreakdown& e) {
  j = nlohmann::json{{"grad_sq", e.grad_sq},
                     {"weighted_l2", e.weighted_l2},
                     {"crit_mass", e.crit_mass},
                     {"q_form", e.q_form},
                     {"energy", e.energy}};
}

namespace {

double lambda_gap(const Field& v, double lambda) {
  const double lam0 = v.grid().params().spectral_shift();
  if (!(lambda > lam0)) throw DomainError("lambda must exceed lambda0 = N(N-2)/4");
  return lambda - lam0;
}

void require_nonlinear_ok(const Field& v) {
  // |v|^{2*-2} v couples angular modes, so only mode 0 is closed under it
  if (v.mode() != 0) throw StructuralError("nonlinear operations need a mode-0 field");
}

}  // namespace

EnergyBreakdown energy(const Field& v, double lambda) {
  const double gap = lambda_gap(v, lambda);
  require_nonlinear_ok(v);
  const double pstar = v.grid().params().critical_exponent();
  EnergyBreakdown e;
  e.grad_sq = h1_inner(v, v);
  e.weighted_l2 = integrate(v, Weight::rho2, 2.0);
  e.crit_mass = integrate(v, Weight::one, pstar);
  e.q_form = e.grad_sq - gap * e.weighted_l2;
  e.energy = 0.5 * e.q_form - e.crit_mass / pstar;
  return e;
}

Field K0(const Field& v, double lambda) {
  const double gap = lambda_gap(v, lambda);
  const Grid& g = v.grid();
  const auto& W = g.weights();
  const auto& r = g.radii();
  Eigen::VectorXd load(v.values().size());
  for (Eigen::Index i = 0; i < load.size(); ++i) {
    const double q = conformal_factor(r[std::size_t(i)]);
    load[i] = gap * W[std::size_t(i)] * q * q * v.values()[i];
  }
  return Field::wrap(v.grid_ptr(), g.laplacian(v.mode()).solve(load), v.mode());
}

Field Kstar(const Field& v) {
  require_nonlinear_ok(v);
  const Grid& g = v.grid();
  const double pm2 = g.params().critical_exponent() - 2.0;
  const auto& W = g.weights();
  Eigen::VectorXd load(v.values().size());
  for (Eigen::Index i = 0; i < load.size(); ++i) {
    const double x = v.values()[i];
    load[i] = x == 0.0 ? 0.0 : W[std::size_t(i)] * std::pow(std::abs(x), pm2) * x;
  }
  return Field::wrap(v.grid_ptr(), g.laplacian(0).solve(load), 0);
}

Field gradient(const Field& v, double lambda) {
  Field k = K0(v, lambda);
  k += Kstar(v);
  return v - k;
}

double nehari_scale(const Field& v, double lambda) {
  const EnergyBreakdown e = energy(v, lambda);
  if (!(e.crit_mass > 0.0)) throw DomainError("nehari_retract of the zero field");
  if (!(e.q_form > 0.0)) throw PreconditionError("field lies outside {Q > 0}; the ray has no interior maximum");
  const double pstar = v.grid().params().critical_exponent();
  return std::pow(e.q_form / e.crit_mass, 1.0 / (pstar - 2.0));
}

Field nehari_retract(const Field& v, double lambda) { return v * nehari_scale(v, lambda); }

double retracted_energy(const Field& v, double lambda) {
  const EnergyBreakdown e = energy(v, lambda);
  if (!(e.crit_mass > 0.0)) throw DomainError("retracted_energy of the zero field");
  if (!(e.q_form > 0.0)) throw PreconditionError("field lies outside {Q > 0}");
  const int N = v.grid().params().dimension;
  const double pstar = v.grid().params().critical_exponent();
  return std::pow(e.q_form / std::pow(e.crit_mass, 2.0 / pstar), 0.5 * N) / N;
}

double nehari_residual(const Field& v, double lambda) {
  const EnergyBreakdown e = energy(v, lambda);
  return e.q_form - e.crit_mass;
}

ConeBounds cone_distance_bounds(const Field& v, Cone side) {
  const Field part = side == Cone::P ? v.negative_part() : v.positive_part();
  const int N = v.grid().params().dimension;
  const double pstar = v.grid().params().critical_exponent();
  ConeBounds b;
  b.side = side;
  b.upper = h1_norm(part);
  b.lower = std::sqrt(sobolev_constant(N)) * std::pow(integrate(part, Weight::one, pstar), 1.0 / pstar);
  return b;
}

ConeBounds cone_distance_bounds(const Field& v) {
  const ConeBounds p = cone_distance_bounds(v, Cone::P);
  const ConeBounds m = cone_distance_bounds(v, Cone::minusP);
  return m.upper < p.upper ? m : p;
}

}  // namespace hbn
