#pragma once

// Tensor-grid discretization of intervals and rectangles with clamped
// (value + normal slope) boundary handling through one ghost layer.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace supremal {

constexpr int kMaxDim = 2;
using Vec2 = std::array<double, 2>;

class Grid {
 public:
  Grid(int dim, std::span<const double> lower, std::span<const double> upper,
       std::span<const int> nodes_per_axis);

  int dim() const { return dim_; }
  int num_nodes() const { return static_cast<int>(weights_.size()); }
  int nodes_along(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  /// Largest spacing over the active axes.
  double max_spacing() const;
  /// Volume of one grid cell (product of spacings).
  double cell_volume() const;

  /// Row-major node index; `i` runs along x, `j` along y (ignored in 1D).
  int index(int i, int j = 0) const { return dim_ == 1 ? i : i * nodes_[1] + j; }
  std::array<int, 2> multi_index(int node) const;
  double coord(int node, int axis) const;
  Vec2 position(int node) const;

  bool is_boundary(int node) const { return boundary_mask_[node] != 0; }
  /// Normalized trapezoid weights (sum to 1). In 2D the four corners carry
  /// zero weight: their jets are fixed by the clamped data.
  std::span<const double> weights() const { return weights_; }
  bool measured(int node) const { return weights_[node] > 0.0; }
  /// The node itself, or for a corner its diagonal interior neighbour.
  int support_node(int node) const;
  const std::vector<int>& interior() const { return interior_; }
  const std::vector<int>& boundary() const { return boundary_; }
  /// Position of `node` in interior(), or -1 for boundary nodes.
  int interior_slot(int node) const { return interior_slot_[node]; }

  bool same_layout(const Grid& other) const;

 private:
  int dim_;
  std::array<int, 2> nodes_{1, 1};
  Vec2 lower_{0.0, 0.0};
  Vec2 upper_{0.0, 0.0};
  Vec2 spacing_{1.0, 1.0};
  std::vector<char> boundary_mask_;
  std::vector<double> weights_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> interior_slot_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a grid; throws InvalidArgument for degenerate boxes or fewer than
/// five nodes on any axis.
GridPtr build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                   std::span<const int> nodes_per_axis);

/// Symmetric positive definite coefficient matrix of the operator A:D^2.
class EllipticMatrix {
 public:
  /// `entries` is row-major, dim*dim values.
  EllipticMatrix(int dim, std::span<const double> entries);
  static EllipticMatrix identity(int dim);

  int dim() const { return dim_; }
  double operator()(int r, int c) const { return a_[r * 2 + c]; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  int dim_;
  std::array<double, 4> a_{};
  double min_eigenvalue_;
};

class ScalarField {
 public:
  ScalarField(GridPtr grid, std::vector<double> values);

  static ScalarField zeros(GridPtr grid);
  static ScalarField from_function(GridPtr grid, const std::function<double(const Vec2&)>& fn);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  double operator[](int node) const { return values_[node]; }
  int size() const { return static_cast<int>(values_.size()); }

  Eigen::Map<const Eigen::VectorXd> as_vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Prescribed boundary values and outward normal slopes. Both arrays are
/// indexed by grid node; entries at interior nodes are ignored. For a node
/// on the face normal to axis k, outward_slope[node][k] is the derivative
/// along the outward normal of that face (corners carry one slope per face).
struct ClampedData {
  std::vector<double> value;
  std::vector<Vec2> outward_slope;

  static ClampedData zero(const Grid& grid);
  static ClampedData from_function(const Grid& grid,
                                   const std::function<double(const Vec2&)>& u0,
                                   const std::function<Vec2(const Vec2&)>& grad_u0);
  /// Data listed in grid.boundary() order.
  static ClampedData from_boundary_lists(const Grid& grid, std::span<const double> values,
                                         std::span<const Vec2> slopes);
  /// 1D convenience: u(a), u'(a), u(b), u'(b) with ordinary (not outward) derivatives.
  static ClampedData hermite_1d(const Grid& grid, double ua, double dua, double ub, double dub);

  void validate(const Grid& grid) const;
};

/// Field plus one ghost layer on every face (and at the corners in 2D).
class ExtendedField {
 public:
  ExtendedField(GridPtr grid, std::vector<double> values);
  /// i in [-1, nx], j in [-1, ny] (j ignored in 1D).
  double at(int i, int j = 0) const;
  const Grid& grid() const { return *grid_; }

 private:
  GridPtr grid_;
  int stride_;
  std::vector<double> values_;
};

/// Sets boundary node values from `data` and fills the ghost layer by
/// second-order reflection: ghost = mirror + 2 h * outward slope.
ExtendedField clamp_boundary(const ScalarField& field, const ClampedData& data);

/// Central-difference gradient at interior nodes, in grid.interior() order.
std::vector<Vec2> apply_gradient(const ScalarField& field);

/// A:D^2 at interior nodes (3-point / 9-point stencils), in grid.interior() order.
std::vector<double> apply_elliptic(const ScalarField& field, const EllipticMatrix& a);

/// Affine map u -> M u + b from node values to a per-node quantity.
struct AffineOperator {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd offset;

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return matrix * u + offset;
  }
};

/// Differential stencils evaluated at every grid node. Boundary nodes read
/// the ghost layer, which is eliminated through the clamped data: the linear
/// part lives in the matrices and the slope contribution in the offsets.
class JetStencil {
 public:
  JetStencil(GridPtr grid, const EllipticMatrix& a);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const EllipticMatrix& matrix_a() const { return a_; }

  const Eigen::SparseMatrix<double>& gradient_matrix(int axis) const { return gradient_[axis]; }
  const Eigen::SparseMatrix<double>& elliptic_matrix() const { return elliptic_; }

  AffineOperator gradient(int axis, const ClampedData& data) const;
  AffineOperator elliptic(const ClampedData& data) const;

  /// W^{-1} E^T W v: adjoint of the zero-slope elliptic operator in the
  /// weighted inner product (zero at unweighted corners).
  Eigen::VectorXd elliptic_adjoint(const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  // Extended index (i, j) -> mirror node plus slope terms (slope node, axis, coefficient).
  struct Resolved {
    int node;
    int num_slopes = 0;
    std::array<int, 2> slope_axis{};
    std::array<double, 2> slope_coef{};
    int slope_node = -1;
  };
  Resolved resolve(int i, int j) const;
  Eigen::VectorXd slope_vector(const ClampedData& data) const;

  GridPtr grid_;
  EllipticMatrix a_;
  std::array<Eigen::SparseMatrix<double>, 2> gradient_;
  Eigen::SparseMatrix<double> elliptic_;
  // node quantity offset = slope matrix * (outward slopes stacked as 2 * node + axis)
  std::array<Eigen::SparseMatrix<double>, 2> gradient_slope_;
  Eigen::SparseMatrix<double> elliptic_slope_;
};

/// Reduced jet (u, Du, A:D^2u) at every grid node.
struct Jet2Field {
  GridPtr grid;
  std::vector<double> value;
  std::vector<Vec2> gradient;
  std::vector<double> elliptic;

  int size() const { return static_cast<int>(value.size()); }
};

Jet2Field compute_jet(const JetStencil& stencil, const ScalarField& u, const ClampedData& data);
/// Jet of a variation with clamped-zero data (zero value and slope).
Jet2Field compute_variation_jet(const JetStencil& stencil, const ScalarField& psi);

/// Weighted inner product over all nodes.
double weighted_dot(const Grid& grid, std::span<const double> a, std::span<const double> b);

}  // namespace supremal
