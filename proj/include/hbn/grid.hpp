#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hbn/model.hpp"

namespace hbn {

enum class Grading { uniform, boundary_refined, center_refined };
enum class GridKind { radial, axisym };
enum class Weight { one, rho2, rhoN };

Grading parse_grading(const std::string& name);
std::string to_string(Grading g);

inline constexpr std::size_t kDirichlet = std::numeric_limits<std::size_t>::max();

// Flux connection between two nodes (or a node and the Dirichlet boundary when b == kDirichlet).
struct Edge {
  std::size_t a;
  std::size_t b;
  double conductance;
  double face_radius;
};

// Cylindrical coordinates of a node: z along the symmetry axis, s = |x'|.
// Radial grids store z = r, s = 0.
struct NodePos {
  double z;
  double s;
};

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

// Factorized stiffness matrix for one angular mode, restricted to the unknown nodes.
class LaplaceOperator {
 public:
  LaplaceOperator(const Grid& grid, int mode);
  ~LaplaceOperator();
  LaplaceOperator(const LaplaceOperator&) = delete;
  LaplaceOperator& operator=(const LaplaceOperator&) = delete;

  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
  const std::vector<std::size_t>& unknowns() const { return unknowns_; }

  // Solves K x = load on the unknowns; boundary entries of the result are zero.
  Eigen::VectorXd solve(const Eigen::VectorXd& load) const;
  // K u on the unknowns, zero on boundary nodes.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;

 private:
  struct Factor;
  std::size_t n_nodes_;
  std::vector<std::size_t> unknowns_;
  std::vector<std::ptrdiff_t> slot_;
  Eigen::SparseMatrix<double> stiffness_;
  std::unique_ptr<Factor> factor_;
};

class Grid {
 public:
  virtual ~Grid() = default;

  const ModelParams& params() const { return params_; }
  virtual GridKind kind() const = 0;
  std::size_t size() const { return radii_.size(); }
  int order() const { return 2; }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& radii() const { return radii_; }
  const std::vector<NodePos>& positions() const { return positions_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<char>& boundary_mask() const { return boundary_; }
  // Integral of omega r^{N-3} over each radial cell; multiplies l(l+N-2). Empty on axisymmetric grids.
  const std::vector<double>& angular_potential() const { return angular_; }

  // Local mesh width around radius r (axial position z for axisymmetric grids).
  virtual double spacing_near(double z, double s = 0.0) const = 0;

  const LaplaceOperator& laplacian(int mode) const;

  // sum over edges c (a_i - a_j)(b_i - b_j) [coef(face radius)] + angular term.
  double dirichlet_form(const double* a, const double* b, int mode) const;
  double dirichlet_form(const double* a, const double* b, int mode,
                        const std::function<double(double)>& coef) const;

 protected:
  explicit Grid(const ModelParams& p) : params_(p) {}

  ModelParams params_;
  std::vector<double> weights_;
  std::vector<double> radii_;
  std::vector<NodePos> positions_;
  std::vector<Edge> edges_;
  std::vector<char> boundary_;
  std::vector<double> angular_;

 private:
  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::unique_ptr<LaplaceOperator>> cache_;
};

class RadialGrid final : public Grid {
 public:
  static std::shared_ptr<const RadialGrid> build(const ModelParams& params, int n, Grading grading,
                                                 double beta = 0.0);

  GridKind kind() const override { return GridKind::radial; }
  double spacing_near(double z, double s = 0.0) const override;
  Grading grading() const { return grading_; }
  double beta() const { return beta_; }
  const std::vector<double>& faces() const { return faces_; }

 private:
  RadialGrid(const ModelParams& p) : Grid(p) {}
  Grading grading_ = Grading::uniform;
  double beta_ = 0.0;
  std::vector<double> faces_;
};

// Cell-centred Cartesian grid on the half disk {z^2 + s^2 < R_e^2, s > 0}; cells of width h = R_e/m.
class AxisymGrid final : public Grid {
 public:
  static std::shared_ptr<const AxisymGrid> build(const ModelParams& params, int m);

  GridKind kind() const override { return GridKind::axisym; }
  double spacing_near(double, double = 0.0) const override { return h_; }
  int cells_per_radius() const { return m_; }
  double h() const { return h_; }
  // Node index of the mirror image under z -> -z (exact involution).
  std::size_t reflect(std::size_t k) const { return mirror_[k]; }

 private:
  AxisymGrid(const ModelParams& p) : Grid(p) {}
  int m_ = 0;
  double h_ = 0.0;
  std::vector<std::size_t> mirror_;
};

std::shared_ptr<const RadialGrid> build_radial_grid(const ModelParams& params, int n, Grading grading,
                                                    double beta = 0.0);
std::shared_ptr<const AxisymGrid> build_axisym_grid(const ModelParams& params, int m);

class Field {
 public:
  Field() = default;
  // Rejects non-finite values and nonzero boundary values.
  Field(GridPtr grid, Eigen::VectorXd values, int mode = 0);

  static Field zeros(GridPtr grid, int mode = 0);
  // Samples f at every node; boundary nodes are set to zero.
  static Field sample(GridPtr grid, const std::function<double(const NodePos&)>& f, int mode = 0);
  static Field radial(GridPtr grid, const std::function<double(double)>& f, int mode = 0);

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  int mode() const { return mode_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  bool empty() const { return grid_ == nullptr; }

  // Same grid object and angular mode.
  bool compatible(const Field& other) const;
  void require_compatible(const Field& other, const char* where) const;

  Field positive_part() const;
  // min(v, 0), so v = positive_part() + negative_part().
  Field negative_part() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double t);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double t) { return a *= t; }
  friend Field operator*(double t, Field a) { return a *= t; }
  Field operator-() const { return (*this) * -1.0; }

  // Unchecked construction for internal kernels that preserve the invariants.
  static Field wrap(GridPtr grid, Eigen::VectorXd values, int mode);

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
  int mode_ = 0;
};

double weight_value(Weight w, double r, int dimension);

// sum_i W_i w(r_i) |f_i|^p
double integrate(const Field& f, Weight w, double p = 1.0);
double h1_inner(const Field& f, const Field& g);
double h1_norm(const Field& f);

// Discrete -Delta: M^{-1} K f.
Field laplacian_apply(const Field& f);
// Discrete solution x of -Delta x = rhs with Dirichlet data.
Field laplacian_solve(const Field& rhs);

// Linear interpolation in r of a mode-0 radial field onto another grid.
Field resample_radial(const Field& radial, GridPtr target);

void write_csv(std::ostream& os, const Field& f);

}  // namespace hbn
