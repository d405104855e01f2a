#include "hbn/grid.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "hbn/errors.hpp"

namespace hbn {

Grading parse_grading(const std::string& name) {
  if (name == "uniform") return Grading::uniform;
  if (name == "boundary_refined") return Grading::boundary_refined;
  if (name == "center_refined") return Grading::center_refined;
  throw ConfigError("unknown grading '" + name + "' (uniform, boundary_refined, center_refined)");
}

std::string to_string(Grading g) {
  switch (g) {
    case Grading::uniform: return "uniform";
    case Grading::boundary_refined: return "boundary_refined";
    case Grading::center_refined: return "center_refined";
  }
  return "?";
}

// ---------------------------------------------------------------- LaplaceOperator

struct LaplaceOperator::Factor {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

LaplaceOperator::LaplaceOperator(const Grid& grid, int mode) : n_nodes_(grid.size()) {
  if (mode < 0) throw DomainError("angular mode must be >= 0");
  if (mode > 0 && grid.kind() != GridKind::radial)
    throw StructuralError("angular modes > 0 exist only on radial grids");

  const auto& bnd = grid.boundary_mask();
  slot_.assign(n_nodes_, -1);
  for (std::size_t i = 0; i < n_nodes_; ++i) {
    if (!bnd[i]) {
      slot_[i] = static_cast<std::ptrdiff_t>(unknowns_.size());
      unknowns_.push_back(i);
    }
  }
  const auto m = static_cast<Eigen::Index>(unknowns_.size());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid.edges().size() * 4 + unknowns_.size());
  for (const Edge& e : grid.edges()) {
    const std::ptrdiff_t sa = slot_[e.a];
    const std::ptrdiff_t sb = e.b == kDirichlet ? -1 : slot_[e.b];
    if (sa >= 0) trip.emplace_back(sa, sa, e.conductance);
    if (sb >= 0) trip.emplace_back(sb, sb, e.conductance);
    if (sa >= 0 && sb >= 0) {
      trip.emplace_back(sa, sb, -e.conductance);
      trip.emplace_back(sb, sa, -e.conductance);
    }
  }
  if (mode > 0) {
    const int N = grid.params().dimension;
    const double ll = double(mode) * (mode + N - 2);
    const auto& pot = grid.angular_potential();
    for (std::size_t i = 0; i < n_nodes_; ++i)
      if (slot_[i] >= 0) trip.emplace_back(slot_[i], slot_[i], ll * pot[i]);
  }
  stiffness_.resize(m, m);
  stiffness_.setFromTriplets(trip.begin(), trip.end());
  stiffness_.makeCompressed();

  factor_ = std::make_unique<Factor>();
  factor_->ldlt.compute(stiffness_);
  if (factor_->ldlt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "stiffness factorization failed (mode " << mode << ", " << m << " unknowns)";
    throw NumericalError(os.str());
  }
  const auto d = factor_->ldlt.vectorD();
  if (d.size() > 0 && !(d.minCoeff() > 0.0)) {
    std::ostringstream os;
    os << "stiffness not positive definite (mode " << mode << ", min pivot " << d.minCoeff() << ")";
    throw NumericalError(os.str());
  }
}

LaplaceOperator::~LaplaceOperator() = default;

Eigen::VectorXd LaplaceOperator::solve(const Eigen::VectorXd& load) const {
  Eigen::VectorXd b(static_cast<Eigen::Index>(unknowns_.size()));
  for (std::size_t k = 0; k < unknowns_.size(); ++k) b[Eigen::Index(k)] = load[Eigen::Index(unknowns_[k])];
  Eigen::VectorXd x = factor_->ldlt.solve(b);
  if (factor_->ldlt.info() != Eigen::Success) throw NumericalError("stiffness solve failed");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(n_nodes_));
  for (std::size_t k = 0; k < unknowns_.size(); ++k) out[Eigen::Index(unknowns_[k])] = x[Eigen::Index(k)];
  return out;
}

Eigen::VectorXd LaplaceOperator::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(unknowns_.size()));
  for (std::size_t k = 0; k < unknowns_.size(); ++k) x[Eigen::Index(k)] = u[Eigen::Index(unknowns_[k])];
  Eigen::VectorXd y = stiffness_ * x;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(n_nodes_));
  for (std::size_t k = 0; k < unknowns_.size(); ++k) out[Eigen::Index(unknowns_[k])] = y[Eigen::Index(k)];
  return out;
}

// ---------------------------------------------------------------- Grid

const LaplaceOperator& Grid::laplacian(int mode) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = cache_.find(mode);
  if (it == cache_.end()) it = cache_.emplace(mode, std::make_unique<LaplaceOperator>(*this, mode)).first;
  return *it->second;
}

double Grid::dirichlet_form(const double* a, const double* b, int mode) const {
  double s = 0.0;
  for (const Edge& e : edges_) {
    const double da = e.b == kDirichlet ? a[e.a] : a[e.a] - a[e.b];
    const double db = e.b == kDirichlet ? b[e.a] : b[e.a] - b[e.b];
    s += e.conductance * da * db;
  }
  if (mode > 0) {
    const double ll = double(mode) * (mode + params_.dimension - 2);
    for (std::size_t i = 0; i < angular_.size(); ++i) s += ll * angular_[i] * a[i] * b[i];
  }
  return s;
}

double Grid::dirichlet_form(const double* a, const double* b, int mode,
                            const std::function<double(double)>& coef) const {
  double s = 0.0;
  for (const Edge& e : edges_) {
    const double da = e.b == kDirichlet ? a[e.a] : a[e.a] - a[e.b];
    const double db = e.b == kDirichlet ? b[e.a] : b[e.a] - b[e.b];
    s += e.conductance * coef(e.face_radius) * da * db;
  }
  if (mode > 0) {
    const double ll = double(mode) * (mode + params_.dimension - 2);
    for (std::size_t i = 0; i < angular_.size(); ++i)
      s += ll * angular_[i] * coef(radii_[i]) * a[i] * b[i];
  }
  return s;
}

// ---------------------------------------------------------------- RadialGrid

std::shared_ptr<const RadialGrid> RadialGrid::build(const ModelParams& params, int n, Grading grading,
                                                    double beta) {
  if (n < 16) throw ConfigError("radial grid needs n >= 16, got " + std::to_string(n));
  const ModelParams p = ModelParams::make(params.dimension, params.ball_radius);
  std::shared_ptr<RadialGrid> g(new RadialGrid(p));
  g->grading_ = grading;
  if (beta <= 0.0) beta = grading == Grading::boundary_refined ? 0.5 : grading == Grading::center_refined ? 8.0 : 0.0;
  if (grading == Grading::boundary_refined && !(beta < 1.0))
    throw ConfigError("boundary_refined grading needs beta < 1 for a monotone map");
  g->beta_ = grading == Grading::uniform ? 0.0 : beta;

  const int N = p.dimension;
  const double R = p.ball_radius;
  const double om = sphere_area(N);
  std::vector<double> r(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / (n - 0.5);
    double x = s;
    if (grading == Grading::boundary_refined) x = s * (1.0 + beta) - beta * s * s;
    if (grading == Grading::center_refined) x = std::sinh(beta * s) / std::sinh(beta);
    r[std::size_t(i)] = R * x;
  }
  r.back() = R;
  for (int i = 1; i < n; ++i)
    if (!(r[std::size_t(i)] > r[std::size_t(i - 1)])) throw ConfigError("grading produced non-increasing nodes");

  auto& f = g->faces_;
  f.resize(std::size_t(n) + 1);
  f[0] = 0.0;
  for (int i = 1; i < n; ++i) f[std::size_t(i)] = 0.5 * (r[std::size_t(i - 1)] + r[std::size_t(i)]);
  f[std::size_t(n)] = R;

  g->radii_ = r;
  g->positions_.resize(r.size());
  g->weights_.resize(r.size());
  g->angular_.resize(r.size());
  g->boundary_.assign(r.size(), 0);
  g->boundary_.back() = 1;
  for (std::size_t i = 0; i < r.size(); ++i) {
    g->positions_[i] = NodePos{r[i], 0.0};
    g->weights_[i] = om * (std::pow(f[i + 1], N) - std::pow(f[i], N)) / N;
    g->angular_[i] = om * (std::pow(f[i + 1], N - 2) - std::pow(f[i], N - 2)) / (N - 2);
  }
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double c = om * std::pow(f[i + 1], N - 1) / (r[i + 1] - r[i]);
    // off-diagonal entries are -c: nonpositive, so the stiffness stays an M-matrix
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("grading produced a degenerate cell");
    g->edges_.push_back(Edge{i, i + 1, c, f[i + 1]});
  }
  return g;
}

double RadialGrid::spacing_near(double z, double s) const {
  const double r = std::hypot(z, s);
  const auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
  std::size_t i = static_cast<std::size_t>(it - radii_.begin());
  if (i >= radii_.size()) i = radii_.size() - 1;
  double h = 0.0;
  if (i + 1 < radii_.size()) h = std::max(h, radii_[i + 1] - radii_[i]);
  if (i > 0) h = std::max(h, radii_[i] - radii_[i - 1]);
  return h;
}

// ---------------------------------------------------------------- AxisymGrid

std::shared_ptr<const AxisymGrid> AxisymGrid::build(const ModelParams& params, int m) {
  if (m < 8) throw ConfigError("axisymmetric grid needs at least 8 cells per radius");
  const ModelParams p = ModelParams::make(params.dimension, params.ball_radius);
  std::shared_ptr<AxisymGrid> g(new AxisymGrid(p));
  const int N = p.dimension;
  const double R = p.ball_radius;
  const double h = R / m;
  g->m_ = m;
  g->h_ = h;
  const double cN = sphere_area(N - 1);
  const int nz = 2 * m;
  const int ns = m;

  auto zc = [&](int i) { return (i - m + 0.5) * h; };
  auto sc = [&](int j) { return (j + 0.5) * h; };
  auto inside = [&](int i, int j) {
    if (i < 0 || i >= nz || j < 0 || j >= ns) return false;
    const double z = zc(i), s = sc(j);
    return z * z + s * s < R * R;
  };

  std::vector<std::ptrdiff_t> idx(std::size_t(nz) * ns, -1);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < ns; ++j)
      if (inside(i, j)) {
        idx[std::size_t(i) * ns + j] = std::ptrdiff_t(g->radii_.size());
        const double z = zc(i), s = sc(j);
        g->positions_.push_back(NodePos{z, s});
        g->radii_.push_back(std::hypot(z, s));
        const double slo = s - 0.5 * h, shi = s + 0.5 * h;
        g->weights_.push_back(cN * h * (std::pow(shi, N - 1) - std::pow(slo, N - 1)) / (N - 1));
      }
  g->boundary_.assign(g->radii_.size(), 0);
  g->mirror_.resize(g->radii_.size());

  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < ns; ++j) {
      const std::ptrdiff_t k = idx[std::size_t(i) * ns + j];
      if (k < 0) continue;
      const auto a = std::size_t(k);
      g->mirror_[a] = std::size_t(idx[std::size_t(nz - 1 - i) * ns + j]);
      const double z = zc(i), s = sc(j);
      const double slo = s - 0.5 * h, shi = s + 0.5 * h;
      const double az = cN * (std::pow(shi, N - 1) - std::pow(slo, N - 1)) / (N - 1);
      const double as = cN * std::pow(shi, N - 2) * h;
      // +z neighbour
      if (inside(i + 1, j)) {
        const auto b = std::size_t(idx[std::size_t(i + 1) * ns + j]);
        g->edges_.push_back(Edge{a, b, az / h, std::hypot(z + 0.5 * h, s)});
      } else {
        const double d = std::max(std::sqrt(R * R - s * s) - z, 1e-3 * h);
        g->edges_.push_back(Edge{a, kDirichlet, az / d, R});
      }
      if (!inside(i - 1, j)) {
        const double d = std::max(z + std::sqrt(R * R - s * s), 1e-3 * h);
        g->edges_.push_back(Edge{a, kDirichlet, az / d, R});
      }
      // +s neighbour; the axis s = 0 carries no flux
      if (inside(i, j + 1)) {
        const auto b = std::size_t(idx[std::size_t(i) * ns + j + 1]);
        g->edges_.push_back(Edge{a, b, as / h, std::hypot(z, shi)});
      } else {
        const double d = std::max(std::sqrt(R * R - z * z) - s, 1e-3 * h);
        g->edges_.push_back(Edge{a, kDirichlet, as / d, R});
      }
    }
  return g;
}

std::shared_ptr<const RadialGrid> build_radial_grid(const ModelParams& params, int n, Grading grading,
                                                    double beta) {
  return RadialGrid::build(params, n, grading, beta);
}

std::shared_ptr<const AxisymGrid> build_axisym_grid(const ModelParams& params, int m) {
  return AxisymGrid::build(params, m);
}

// ---------------------------------------------------------------- Field

Field::Field(GridPtr grid, Eigen::VectorXd values, int mode)
    : grid_(std::move(grid)), values_(std::move(values)), mode_(mode) {
  if (!grid_) throw StructuralError("field without grid");
  if (std::size_t(values_.size()) != grid_->size())
    throw StructuralError("field size " + std::to_string(values_.size()) + " does not match grid size " +
                          std::to_string(grid_->size()));
  if (mode_ < 0) throw DomainError("angular mode must be >= 0");
  if (mode_ > 0 && grid_->kind() != GridKind::radial)
    throw StructuralError("angular modes > 0 exist only on radial grids");
  const auto& bnd = grid_->boundary_mask();
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw NumericalError("field value not finite at node " + std::to_string(i));
    if (bnd[std::size_t(i)] && values_[i] != 0.0)
      throw StructuralError("field value at a Dirichlet node must be 0");
  }
}

Field Field::wrap(GridPtr grid, Eigen::VectorXd values, int mode) {
  Field f;
  f.grid_ = std::move(grid);
  f.values_ = std::move(values);
  f.mode_ = mode;
  return f;
}

Field Field::zeros(GridPtr grid, int mode) {
  const auto n = Eigen::Index(grid->size());
  return Field(std::move(grid), Eigen::VectorXd::Zero(n), mode);
}

Field Field::sample(GridPtr grid, const std::function<double(const NodePos&)>& f, int mode) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid->size()));
  const auto& pos = grid->positions();
  const auto& bnd = grid->boundary_mask();
  for (std::size_t i = 0; i < pos.size(); ++i) v[Eigen::Index(i)] = bnd[i] ? 0.0 : f(pos[i]);
  return Field(std::move(grid), std::move(v), mode);
}

Field Field::radial(GridPtr grid, const std::function<double(double)>& f, int mode) {
  return sample(
      std::move(grid), [&](const NodePos& p) { return f(std::hypot(p.z, p.s)); }, mode);
}

bool Field::compatible(const Field& other) const { return grid_ == other.grid_ && mode_ == other.mode_; }

void Field::require_compatible(const Field& other, const char* where) const {
  if (grid_ != other.grid_) throw StructuralError(std::string(where) + ": fields live on different grids");
  if (mode_ != other.mode_) throw StructuralError(std::string(where) + ": fields have different angular modes");
}

Field Field::positive_part() const { return wrap(grid_, values_.cwiseMax(0.0), mode_); }
Field Field::negative_part() const { return wrap(grid_, values_.cwiseMin(0.0), mode_); }

Field& Field::operator+=(const Field& o) {
  require_compatible(o, "operator+");
  values_ += o.values_;
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_compatible(o, "operator-");
  values_ -= o.values_;
  return *this;
}

Field& Field::operator*=(double t) {
  values_ *= t;
  return *this;
}

// ---------------------------------------------------------------- quadrature and operators

double weight_value(Weight w, double r, int dimension) {
  switch (w) {
    case Weight::one: return 1.0;
    case Weight::rho2: {
      const double q = conformal_factor(r);
      return q * q;
    }
    case Weight::rhoN: return std::pow(conformal_factor(r), dimension);
  }
  return 1.0;
}

double integrate(const Field& f, Weight w, double p) {
  const Grid& g = f.grid();
  const auto& W = g.weights();
  const auto& r = g.radii();
  const int N = g.params().dimension;
  double s = 0.0;
  const auto& v = f.values();
  for (std::size_t i = 0; i < W.size(); ++i) {
    const double a = std::abs(v[Eigen::Index(i)]);
    if (a == 0.0) continue;
    const double ap = p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p);
    s += W[i] * weight_value(w, r[i], N) * ap;
  }
  return s;
}

double h1_inner(const Field& f, const Field& g) {
  if (f.grid_ptr() != g.grid_ptr()) throw StructuralError("h1_inner: fields live on different grids");
  // distinct spherical-harmonic degrees are orthogonal
  if (f.mode() != g.mode()) return 0.0;
  return f.grid().dirichlet_form(f.values().data(), g.values().data(), f.mode());
}

double h1_norm(const Field& f) { return std::sqrt(std::max(0.0, h1_inner(f, f))); }

Field laplacian_apply(const Field& f) {
  const Grid& g = f.grid();
  Eigen::VectorXd y = g.laplacian(f.mode()).apply(f.values());
  const auto& W = g.weights();
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] /= W[std::size_t(i)];
  return Field::wrap(f.grid_ptr(), std::move(y), f.mode());
}

Field laplacian_solve(const Field& rhs) {
  const Grid& g = rhs.grid();
  Eigen::VectorXd load = rhs.values();
  const auto& W = g.weights();
  for (Eigen::Index i = 0; i < load.size(); ++i) load[i] *= W[std::size_t(i)];
  return Field::wrap(rhs.grid_ptr(), g.laplacian(rhs.mode()).solve(load), rhs.mode());
}

Field resample_radial(const Field& radial, GridPtr target) {
  if (radial.grid().kind() != GridKind::radial || radial.mode() != 0)
    throw StructuralError("resample_radial needs a mode-0 radial field");
  if (radial.grid().params().dimension != target->params().dimension)
    throw StructuralError("resample_radial: dimension mismatch");
  const auto& r = radial.grid().radii();
  const auto& v = radial.values();
  return Field::sample(std::move(target), [&](const NodePos& p) {
    const double x = std::hypot(p.z, p.s);
    if (x <= r.front()) return v[0];
    if (x >= r.back()) return 0.0;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t j = std::size_t(it - r.begin());
    const double t = (x - r[j - 1]) / (r[j] - r[j - 1]);
    return (1.0 - t) * v[Eigen::Index(j - 1)] + t * v[Eigen::Index(j)];
  });
}

void write_csv(std::ostream& os, const Field& f) {
  const auto old = os.precision(17);
  const auto& pos = f.grid().positions();
  const bool rad = f.grid().kind() == GridKind::radial;
  os << (rad ? "r,value\n" : "z,s,value\n");
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (rad)
      os << pos[i].z << ',' << f[i] << '\n';
    else
      os << pos[i].z << ',' << pos[i].s << ',' << f[i] << '\n';
  }
  os.precision(old);
}

}  // namespace hbn
