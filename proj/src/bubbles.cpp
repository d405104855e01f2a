#include "hbn/bubbles.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "hbn/errors.hpp"

namespace hbn {

double instanton_value(int N, double eps, double dist) {
  const double c = std::pow(double(N) * (N - 2), 0.25 * (N - 2));
  return c * std::pow(eps / (eps * eps + dist * dist), 0.5 * (N - 2));
}

namespace {

double sign_of(Sign s) { return s == Sign::plus ? 1.0 : -1.0; }

// Asymptotic series of int_L^inf r^p (1+r^2)^{-N} dr for L > 1.
double moment_tail_series(int N, int p, double L) {
  double sum = 0.0, coef = 1.0;
  for (int k = 0; k < 80; ++k) {
    const double expo = p - 2.0 * N - 2.0 * k + 1.0;
    const double term = coef * std::pow(L, expo) / -expo;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    coef *= -double(N + k) / double(k + 1);
  }
  return sum;
}

}  // namespace

double instanton_moment(int N, int p, double a) {
  constexpr double L = 40.0;
  if (a >= L) return moment_tail_series(N, p, a);
  auto f = [N, p](double r) { return std::pow(r, p) * std::pow(1.0 + r * r, -N); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double body = 0.0;
  // panels keep the peak near r ~ 1 well resolved
  const double cuts[] = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, L};
  for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
    const double lo = std::max(a, cuts[i]), hi = cuts[i + 1];
    if (hi <= lo) continue;
    body += GK::integrate(f, lo, hi, 15, 1e-15);
  }
  return body + moment_tail_series(N, p, L);
}

double sobolev_constant(int N) {
  if (N < 3) throw DomainError("sobolev_constant needs N >= 3");
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = cache.find(N); it != cache.end()) return it->second;
  const double c = std::pow(double(N) * (N - 2), 0.25 * (N - 2));
  const double om = sphere_area(N);
  const double pstar = 2.0 * N / (N - 2);
  const double grad = om * c * c * (N - 2.0) * (N - 2.0) * instanton_moment(N, N + 1, 0.0);
  const double crit = om * std::pow(c, pstar) * instanton_moment(N, N - 1, 0.0);
  const double S = grad / std::pow(crit, 2.0 / pstar);
  cache[N] = S;
  return S;
}

double threshold_1(int N) { return std::pow(sobolev_constant(N), 0.5 * N) / N; }
double threshold_2(int N) { return 2.0 * threshold_1(N); }

double smooth_bump(double d, double inner, double outer) {
  if (d <= inner) return 1.0;
  if (d >= outer) return 0.0;
  const double x = (d - inner) / (outer - inner);
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

double capacity_profile(int N, double d, double r0, double r) {
  if (d <= r0) return 1.0;
  if (d >= r) return 0.0;
  const double e = 2.0 - N;
  return (std::pow(d, e) - std::pow(r, e)) / (std::pow(r0, e) - std::pow(r, e));
}

double capacity_value(int N, double r0, double r) {
  const double e = 2.0 - N;
  return (N - 2.0) * sphere_area(N) / (std::pow(r0, e) - std::pow(r, e));
}

namespace {

double node_distance(const NodePos& p, double offset) { return std::hypot(p.z - offset, p.s); }

void require_axis_offset(const Grid& g, double offset) {
  if (offset != 0.0 && g.kind() == GridKind::radial)
    throw StructuralError("off-centre constructions need an axisymmetric grid");
}

}  // namespace

Field capacity_minimizer(const CutoffParams& cut, GridPtr grid, double center_offset) {
  const double r0 = cut.inner_radius, r = cut.outer_radius;
  if (!(r0 > 0.0) || !(r0 < r)) throw PreconditionError("capacity_minimizer needs 0 < r0 < r");
  require_axis_offset(*grid, center_offset);
  const Grid& g = *grid;
  const auto& pos = g.positions();
  const auto& bnd = g.boundary_mask();
  const std::size_t n = g.size();

  // 0: free, 1: plate (value 1), 2: grounded (value 0)
  std::vector<int> kind(n);
  std::vector<std::ptrdiff_t> slot(n, -1);
  std::ptrdiff_t nf = 0;
  bool any_plate = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = node_distance(pos[i], center_offset);
    kind[i] = bnd[i] || d >= r ? 2 : d <= r0 ? 1 : 0;
    any_plate |= kind[i] == 1;
    if (kind[i] == 0) slot[i] = nf++;
  }
  if (!any_plate) throw ResolutionError("capacity_minimizer: no grid node inside the inner ball; refine the grid");

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  auto couple = [&](std::size_t a, std::size_t b, double c) {
    if (kind[a] != 0) return;
    trip.emplace_back(slot[a], slot[a], c);
    if (b == kDirichlet) return;
    if (kind[b] == 0)
      trip.emplace_back(slot[a], slot[b], -c);
    else if (kind[b] == 1)
      rhs[slot[a]] += c;
  };
  for (const Edge& e : g.edges()) {
    couple(e.a, e.b, e.conductance);
    if (e.b != kDirichlet) couple(e.b, e.a, e.conductance);
  }
  Eigen::VectorXd x;
  if (nf > 0) {
    Eigen::SparseMatrix<double> K(nf, nf);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw NumericalError("capacity_minimizer: factorization failed");
    x = ldlt.solve(rhs);
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    v[Eigen::Index(i)] = kind[i] == 1 ? 1.0 : kind[i] == 2 ? 0.0 : x[slot[i]];
  return Field(std::move(grid), std::move(v));
}

void require_resolved(const Grid& grid, double eps, double center_offset) {
  const double h = grid.spacing_near(center_offset, 0.0);
  if (!(eps >= 4.0 * h)) {
    std::ostringstream os;
    os << "bubble scale eps = " << eps << " is below 4x the local mesh width " << h
       << "; refine the grid (more nodes or center_refined grading) or raise eps";
    throw ResolutionError(os.str());
  }
}

Field instanton(const BubbleParams& b, GridPtr grid) {
  if (!(b.epsilon > 0.0)) throw DomainError("instanton needs epsilon > 0");
  require_axis_offset(*grid, b.center_offset);
  const int N = grid->params().dimension;
  const double s = sign_of(b.sign);
  return Field::sample(std::move(grid), [&](const NodePos& p) {
    return s * instanton_value(N, b.epsilon, node_distance(p, b.center_offset));
  });
}

Field truncated_bubble(const BubbleParams& b, const CutoffParams& cut, GridPtr grid) {
  if (!(b.epsilon > 0.0)) throw DomainError("truncated_bubble needs epsilon > 0");
  if (!(cut.inner_radius > 0.0) || !(cut.inner_radius < cut.outer_radius))
    throw PreconditionError("cutoff needs 0 < inner_radius < outer_radius");
  require_axis_offset(*grid, b.center_offset);
  const double R = grid->params().ball_radius;
  if (std::abs(b.center_offset) + cut.outer_radius > R * (1.0 + 1e-12))
    throw PreconditionError("bubble support leaves the domain");
  const int N = grid->params().dimension;
  const double s = sign_of(b.sign);
  if (cut.profile == CutoffProfile::capacity) {
    Field psi = capacity_minimizer(cut, grid, b.center_offset);
    Eigen::VectorXd v = psi.values();
    const auto& pos = grid->positions();
    for (std::size_t i = 0; i < pos.size(); ++i)
      v[Eigen::Index(i)] *= s * instanton_value(N, b.epsilon, node_distance(pos[i], b.center_offset));
    return Field(std::move(grid), std::move(v));
  }
  return Field::sample(std::move(grid), [&](const NodePos& p) {
    const double d = node_distance(p, b.center_offset);
    const double phi = smooth_bump(d, cut.inner_radius, cut.outer_radius);
    return phi == 0.0 ? 0.0 : s * phi * instanton_value(N, b.epsilon, d);
  });
}

double bubble_rayleigh(double eps, double lambda, const CutoffParams& cut, GridPtr grid) {
  const ModelParams& p = grid->params();
  if (!(lambda > p.spectral_shift())) throw DomainError("bubble_rayleigh needs lambda > lambda0");
  require_resolved(*grid, eps, 0.0);
  const Field phi = truncated_bubble(BubbleParams{eps, 0.0, Sign::plus}, cut, grid);
  const double pstar = p.critical_exponent();
  const double q = h1_inner(phi, phi) - (lambda - p.spectral_shift()) * integrate(phi, Weight::rho2, 2.0);
  return q / std::pow(integrate(phi, Weight::one, pstar), 2.0 / pstar);
}

BubbleFit distance_to_bubble_manifold(const Field& v, Sign sign) {
  const Grid& g = v.grid();
  if (v.mode() != 0) throw StructuralError("bubble fit needs a mode-0 field");
  const double vv = h1_inner(v, v);
  if (!(vv > 0.0)) throw DomainError("distance_to_bubble_manifold of the zero field");
  const bool axial = g.kind() == GridKind::axisym;
  const double R = g.params().ball_radius;
  const int N = g.params().dimension;
  const double s = sign_of(sign);
  const auto& pos = g.positions();
  const auto& bnd = g.boundary_mask();

  Eigen::VectorXd u(static_cast<Eigen::Index>(g.size()));
  auto dist2 = [&](double log_eps, double y) {
    const double eps = std::exp(log_eps);
    for (std::size_t i = 0; i < pos.size(); ++i)
      u[Eigen::Index(i)] = bnd[i] ? 0.0 : s * instanton_value(N, eps, node_distance(pos[i], y));
    const double* a = v.values().data();
    const double* b = u.data();
    return vv - 2.0 * g.dirichlet_form(a, b, 0) + g.dirichlet_form(b, b, 0);
  };

  // resolved, grid-supported scales only: finer bubbles alias on the mesh, wider ones flatten towards 0
  const double lo = std::log(4.0 * g.spacing_near(0.0)), hi = std::log(0.5 * R);
  if (!(lo < hi)) throw ResolutionError("bubble fit: grid cannot resolve any bubble scale below R_e/2");

  // coarse lattice scan
  const int ne = 48, ny = axial ? 33 : 1;
  double best = std::numeric_limits<double>::infinity(), ble = lo, by = 0.0;
  for (int i = 0; i < ne; ++i) {
    const double le = lo + (hi - lo) * i / (ne - 1);
    for (int j = 0; j < ny; ++j) {
      const double y = axial ? -0.95 * R + 1.9 * R * j / (ny - 1) : 0.0;
      const double d = dist2(le, y);
      if (d < best) best = d, ble = le, by = y;
    }
  }
  // alternating Brent refinement
  const double dle = (hi - lo) / (ne - 1);
  const double dy = axial ? 1.9 * R / (ny - 1) : 0.0;
  for (int sweep = 0; sweep < (axial ? 4 : 1); ++sweep) {
    auto r1 = boost::math::tools::brent_find_minima([&](double le) { return dist2(le, by); },
                                                    std::max(lo, ble - dle), std::min(hi, ble + dle), 40);
    if (r1.second < best) best = r1.second, ble = r1.first;
    if (axial) {
      auto r2 = boost::math::tools::brent_find_minima([&](double y) { return dist2(ble, y); },
                                                      std::max(-R, by - dy), std::min(R, by + dy), 40);
      if (r2.second < best) best = r2.second, by = r2.first;
    }
  }
  BubbleFit fit{std::sqrt(std::max(best, 0.0)), std::exp(ble), by, ""};
  if (!std::isfinite(best)) {
    fit.dist = std::numeric_limits<double>::infinity();
    fit.diagnostic = "fit did not produce a finite distance";
  } else if (ble <= lo + 1e-9 || ble >= hi - 1e-9) {
    fit.diagnostic = "minimum on the edge of the scale range";
  }
  return fit;
}

InstantonIdentities instanton_identities(const std::shared_ptr<const RadialGrid>& grid, double eps) {
  const ModelParams& p = grid->params();
  const int N = p.dimension;
  const double R = p.ball_radius;
  const double pstar = p.critical_exponent();
  const auto& r = grid->radii();
  Eigen::VectorXd u(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) u[Eigen::Index(i)] = instanton_value(N, eps, r[i]);
  const double grad_grid = grid->dirichlet_form(u.data(), u.data(), 0);
  double crit_grid = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) crit_grid += grid->weights()[i] * std::pow(u[Eigen::Index(i)], pstar);

  const double c = std::pow(double(N) * (N - 2), 0.25 * (N - 2));
  const double om = sphere_area(N);
  // both integrals are scale invariant, so the tails only depend on R/eps
  const double gt = om * c * c * (N - 2.0) * (N - 2.0) * instanton_moment(N, N + 1, R / eps);
  const double ct = om * std::pow(c, pstar) * instanton_moment(N, N - 1, R / eps);
  return InstantonIdentities{grad_grid + gt, crit_grid + ct, gt, ct, std::pow(sobolev_constant(N), 0.5 * N)};
}

}  // namespace hbn
