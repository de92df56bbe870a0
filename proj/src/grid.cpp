#include "supremal/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "supremal/error.hpp"

namespace supremal {

Grid::Grid(int dim, std::span<const double> lower, std::span<const double> upper,
           std::span<const int> nodes_per_axis)
    : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dim));
  }
  if (static_cast<int>(lower.size()) != dim || static_cast<int>(upper.size()) != dim ||
      static_cast<int>(nodes_per_axis.size()) != dim) {
    throw InvalidArgument("grid corners and node counts must have one entry per axis");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(upper[k] > lower[k]) || !std::isfinite(lower[k]) || !std::isfinite(upper[k])) {
      throw InvalidArgument("degenerate interval on axis " + std::to_string(k));
    }
    if (nodes_per_axis[k] < 5) {
      throw InvalidArgument("too few nodes on axis " + std::to_string(k) + ": need at least 5, got " +
                            std::to_string(nodes_per_axis[k]));
    }
    nodes_[k] = nodes_per_axis[k];
    lower_[k] = lower[k];
    upper_[k] = upper[k];
    spacing_[k] = (upper[k] - lower[k]) / (nodes_[k] - 1);
  }

  const int total = nodes_[0] * (dim_ == 2 ? nodes_[1] : 1);
  boundary_mask_.assign(total, 0);
  weights_.assign(total, 0.0);
  interior_slot_.assign(total, -1);

  auto axis_weight = [&](int k, int i) {
    const double w = spacing_[k] / (upper_[k] - lower_[k]);
    return (i == 0 || i == nodes_[k] - 1) ? 0.5 * w : w;
  };
  for (int n = 0; n < total; ++n) {
    const auto [i, j] = multi_index(n);
    bool on_boundary = (i == 0 || i == nodes_[0] - 1);
    double w = axis_weight(0, i);
    if (dim_ == 2) {
      on_boundary = on_boundary || j == 0 || j == nodes_[1] - 1;
      w *= axis_weight(1, j);
    }
    boundary_mask_[n] = on_boundary ? 1 : 0;
    weights_[n] = w;
    if (on_boundary) {
      boundary_.push_back(n);
    } else {
      interior_slot_[n] = static_cast<int>(interior_.size());
      interior_.push_back(n);
    }
  }
  if (dim_ == 2) {
    // the clamped data fix the whole jet at a corner: a null set for the sup
    const int ni = nodes_[0] - 1, nj = nodes_[1] - 1;
    double dropped = 0.0;
    for (const auto& [ci, cj] : {std::pair{0, 0}, {ni, 0}, {0, nj}, {ni, nj}}) {
      dropped += weights_[index(ci, cj)];
      weights_[index(ci, cj)] = 0.0;
    }
    for (double& w : weights_) w /= 1.0 - dropped;
  }
}

int Grid::support_node(int node) const {
  if (weights_[node] > 0.0) return node;
  const auto [i, j] = multi_index(node);
  return index(i == 0 ? 1 : i - 1, j == 0 ? 1 : j - 1);
}

double Grid::max_spacing() const {
  return dim_ == 1 ? spacing_[0] : std::max(spacing_[0], spacing_[1]);
}

double Grid::cell_volume() const { return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1]; }

std::array<int, 2> Grid::multi_index(int node) const {
  if (dim_ == 1) return {node, 0};
  return {node / nodes_[1], node % nodes_[1]};
}

double Grid::coord(int node, int axis) const {
  const auto mi = multi_index(node);
  return lower_[axis] + mi[axis] * spacing_[axis];
}

Vec2 Grid::position(int node) const {
  const auto [i, j] = multi_index(node);
  return {lower_[0] + i * spacing_[0], dim_ == 2 ? lower_[1] + j * spacing_[1] : 0.0};
}

bool Grid::same_layout(const Grid& other) const {
  if (dim_ != other.dim_) return false;
  for (int k = 0; k < dim_; ++k) {
    if (nodes_[k] != other.nodes_[k] || lower_[k] != other.lower_[k] || upper_[k] != other.upper_[k]) {
      return false;
    }
  }
  return true;
}

GridPtr build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                   std::span<const int> nodes_per_axis) {
  return std::make_shared<const Grid>(dim, lower, upper, nodes_per_axis);
}

EllipticMatrix::EllipticMatrix(int dim, std::span<const double> entries) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("matrix A: dimension must be 1 or 2");
  if (static_cast<int>(entries.size()) != dim * dim) {
    throw InvalidArgument("matrix A: expected " + std::to_string(dim * dim) + " entries");
  }
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const double v = entries[r * dim + c];
      if (!std::isfinite(v)) throw InvalidArgument("matrix A: non-finite entry");
      a_[r * 2 + c] = v;
    }
  }
  if (dim == 1) {
    min_eigenvalue_ = a_[0];
  } else {
    if (std::abs(a_[1] - a_[2]) > 1e-12 * (1.0 + std::abs(a_[1]))) {
      throw InvalidArgument("matrix A: not symmetric");
    }
    a_[2] = a_[1];
    const double mean = 0.5 * (a_[0] + a_[3]);
    const double radius = std::hypot(0.5 * (a_[0] - a_[3]), a_[1]);
    min_eigenvalue_ = mean - radius;
  }
  if (!(min_eigenvalue_ > 0.0)) throw InvalidArgument("matrix A: not positive definite");
}

EllipticMatrix EllipticMatrix::identity(int dim) {
  const std::array<double, 4> id2{1.0, 0.0, 0.0, 1.0};
  const std::array<double, 1> id1{1.0};
  return dim == 1 ? EllipticMatrix(1, id1) : EllipticMatrix(2, id2);
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidArgument("field without grid");
  if (static_cast<int>(values_.size()) != grid_->num_nodes()) {
    throw InvalidArgument("field has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(grid_->num_nodes()) + " nodes");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("field contains non-finite values");
  }
}

ScalarField ScalarField::zeros(GridPtr grid) {
  const int n = grid->num_nodes();
  return ScalarField(std::move(grid), std::vector<double>(n, 0.0));
}

ScalarField ScalarField::from_function(GridPtr grid, const std::function<double(const Vec2&)>& fn) {
  std::vector<double> values(grid->num_nodes());
  for (int n = 0; n < grid->num_nodes(); ++n) values[n] = fn(grid->position(n));
  return ScalarField(std::move(grid), std::move(values));
}

ClampedData ClampedData::zero(const Grid& grid) {
  return {std::vector<double>(grid.num_nodes(), 0.0), std::vector<Vec2>(grid.num_nodes(), Vec2{0.0, 0.0})};
}

ClampedData ClampedData::from_function(const Grid& grid, const std::function<double(const Vec2&)>& u0,
                                       const std::function<Vec2(const Vec2&)>& grad_u0) {
  ClampedData data = zero(grid);
  for (int n : grid.boundary()) {
    const Vec2 x = grid.position(n);
    data.value[n] = u0(x);
    const Vec2 g = grad_u0(x);
    const auto mi = grid.multi_index(n);
    for (int k = 0; k < grid.dim(); ++k) {
      if (mi[k] == 0) data.outward_slope[n][k] = -g[k];
      if (mi[k] == grid.nodes_along(k) - 1) data.outward_slope[n][k] = g[k];
    }
  }
  return data;
}

ClampedData ClampedData::from_boundary_lists(const Grid& grid, std::span<const double> values,
                                             std::span<const Vec2> slopes) {
  const auto& bnd = grid.boundary();
  if (values.size() != bnd.size() || slopes.size() != bnd.size()) {
    throw InvalidArgument("clamped data: expected " + std::to_string(bnd.size()) +
                          " boundary entries, got " + std::to_string(values.size()) + " values and " +
                          std::to_string(slopes.size()) + " slopes");
  }
  ClampedData data = zero(grid);
  for (std::size_t b = 0; b < bnd.size(); ++b) {
    data.value[bnd[b]] = values[b];
    data.outward_slope[bnd[b]] = slopes[b];
  }
  data.validate(grid);
  return data;
}

ClampedData ClampedData::hermite_1d(const Grid& grid, double ua, double dua, double ub, double dub) {
  if (grid.dim() != 1) throw InvalidArgument("hermite_1d data requires a 1D grid");
  ClampedData data = zero(grid);
  const int last = grid.num_nodes() - 1;
  data.value[0] = ua;
  data.value[last] = ub;
  data.outward_slope[0][0] = -dua;
  data.outward_slope[last][0] = dub;
  data.validate(grid);
  return data;
}

void ClampedData::validate(const Grid& grid) const {
  if (static_cast<int>(value.size()) != grid.num_nodes()) {
    throw InvalidArgument("clamped data: value array does not match node count");
  }
  if (static_cast<int>(outward_slope.size()) != grid.num_nodes()) {
    throw InvalidArgument("clamped data: missing slope data");
  }
  for (int n : grid.boundary()) {
    if (!std::isfinite(value[n]) || !std::isfinite(outward_slope[n][0]) ||
        !std::isfinite(outward_slope[n][1])) {
      throw InvalidArgument("clamped data: non-finite boundary entry");
    }
  }
}

ExtendedField::ExtendedField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), stride_(grid_->dim() == 2 ? grid_->nodes_along(1) + 2 : 1),
      values_(std::move(values)) {}

double ExtendedField::at(int i, int j) const {
  if (grid_->dim() == 1) return values_[i + 1];
  return values_[(i + 1) * stride_ + (j + 1)];
}

ExtendedField clamp_boundary(const ScalarField& field, const ClampedData& data) {
  const Grid& g = field.grid();
  data.validate(g);
  const int nx = g.nodes_along(0);
  const int ny = g.dim() == 2 ? g.nodes_along(1) : 1;
  const int ex = nx + 2;
  const int ey = g.dim() == 2 ? ny + 2 : 1;

  std::vector<double> nodal(field.values().begin(), field.values().end());
  for (int n : g.boundary()) nodal[n] = data.value[n];

  auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };
  std::vector<double> ext(static_cast<std::size_t>(ex) * ey, 0.0);
  for (int a = 0; a < ex; ++a) {
    for (int b = 0; b < ey; ++b) {
      const int i = a - 1;
      const int j = g.dim() == 2 ? b - 1 : 0;
      // reflect out-of-range coordinates about the face; slope taken at the face node
      int mi = i, mj = j;
      double add = 0.0;
      const int fi = clampi(i, nx);
      const int fj = g.dim() == 2 ? clampi(j, ny) : 0;
      const int face_node = g.index(fi, fj);
      if (i < 0 || i >= nx) {
        mi = i < 0 ? 1 : nx - 2;
        add += 2.0 * g.spacing(0) * data.outward_slope[face_node][0];
      }
      if (g.dim() == 2 && (j < 0 || j >= ny)) {
        mj = j < 0 ? 1 : ny - 2;
        add += 2.0 * g.spacing(1) * data.outward_slope[face_node][1];
      }
      ext[static_cast<std::size_t>(a) * ey + b] = nodal[g.index(mi, mj)] + add;
    }
  }
  return ExtendedField(field.grid_ptr(), std::move(ext));
}

std::vector<Vec2> apply_gradient(const ScalarField& field) {
  const Grid& g = field.grid();
  std::vector<Vec2> out;
  out.reserve(g.interior().size());
  for (int n : g.interior()) {
    const auto [i, j] = g.multi_index(n);
    Vec2 d{0.0, 0.0};
    d[0] = (field[g.index(i + 1, j)] - field[g.index(i - 1, j)]) / (2.0 * g.spacing(0));
    if (g.dim() == 2) d[1] = (field[g.index(i, j + 1)] - field[g.index(i, j - 1)]) / (2.0 * g.spacing(1));
    out.push_back(d);
  }
  return out;
}

std::vector<double> apply_elliptic(const ScalarField& field, const EllipticMatrix& a) {
  const Grid& g = field.grid();
  if (a.dim() != g.dim()) throw InvalidArgument("matrix A dimension does not match the grid");
  std::vector<double> out;
  out.reserve(g.interior().size());
  const double hx = g.spacing(0);
  for (int n : g.interior()) {
    const auto [i, j] = g.multi_index(n);
    double v = a(0, 0) * (field[g.index(i + 1, j)] - 2.0 * field[n] + field[g.index(i - 1, j)]) / (hx * hx);
    if (g.dim() == 2) {
      const double hy = g.spacing(1);
      v += a(1, 1) * (field[g.index(i, j + 1)] - 2.0 * field[n] + field[g.index(i, j - 1)]) / (hy * hy);
      const double cross = field[g.index(i + 1, j + 1)] - field[g.index(i + 1, j - 1)] -
                           field[g.index(i - 1, j + 1)] + field[g.index(i - 1, j - 1)];
      v += 2.0 * a(0, 1) * cross / (4.0 * hx * hy);
    }
    out.push_back(v);
  }
  return out;
}

JetStencil::Resolved JetStencil::resolve(int i, int j) const {
  const Grid& g = *grid_;
  const int nx = g.nodes_along(0);
  const int ny = g.dim() == 2 ? g.nodes_along(1) : 1;
  Resolved r;
  int mi = i, mj = j;
  const int fi = std::clamp(i, 0, nx - 1);
  const int fj = g.dim() == 2 ? std::clamp(j, 0, ny - 1) : 0;
  if (i < 0 || i >= nx) {
    mi = i < 0 ? 1 : nx - 2;
    r.slope_axis[r.num_slopes] = 0;
    r.slope_coef[r.num_slopes] = 2.0 * g.spacing(0);
    ++r.num_slopes;
  }
  if (g.dim() == 2 && (j < 0 || j >= ny)) {
    mj = j < 0 ? 1 : ny - 2;
    r.slope_axis[r.num_slopes] = 1;
    r.slope_coef[r.num_slopes] = 2.0 * g.spacing(1);
    ++r.num_slopes;
  }
  r.node = g.index(mi, mj);
  if (r.num_slopes > 0) r.slope_node = g.index(fi, fj);
  return r;
}

JetStencil::JetStencil(GridPtr grid, const EllipticMatrix& a) : grid_(std::move(grid)), a_(a) {
  const Grid& g = *grid_;
  if (a.dim() != g.dim()) throw InvalidArgument("matrix A dimension does not match the grid");
  const int n_nodes = g.num_nodes();

  using Trip = Eigen::Triplet<double>;
  std::array<std::vector<Trip>, 2> grad_t, grad_s;
  std::vector<Trip> ell_t, ell_s;

  auto add = [&](std::vector<Trip>& mat, std::vector<Trip>& slope, int row, int i, int j, double coef) {
    const Resolved r = resolve(i, j);
    mat.emplace_back(row, r.node, coef);
    for (int s = 0; s < r.num_slopes; ++s) {
      slope.emplace_back(row, 2 * r.slope_node + r.slope_axis[s], coef * r.slope_coef[s]);
    }
  };

  const double hx = g.spacing(0);
  const double hy = g.dim() == 2 ? g.spacing(1) : 1.0;
  for (int n = 0; n < n_nodes; ++n) {
    const auto [i, j] = g.multi_index(n);
    add(grad_t[0], grad_s[0], n, i + 1, j, 0.5 / hx);
    add(grad_t[0], grad_s[0], n, i - 1, j, -0.5 / hx);
    add(ell_t, ell_s, n, i + 1, j, a(0, 0) / (hx * hx));
    add(ell_t, ell_s, n, i, j, -2.0 * a(0, 0) / (hx * hx));
    add(ell_t, ell_s, n, i - 1, j, a(0, 0) / (hx * hx));
    if (g.dim() == 2) {
      add(grad_t[1], grad_s[1], n, i, j + 1, 0.5 / hy);
      add(grad_t[1], grad_s[1], n, i, j - 1, -0.5 / hy);
      add(ell_t, ell_s, n, i, j + 1, a(1, 1) / (hy * hy));
      add(ell_t, ell_s, n, i, j, -2.0 * a(1, 1) / (hy * hy));
      add(ell_t, ell_s, n, i, j - 1, a(1, 1) / (hy * hy));
      if (a(0, 1) != 0.0) {
        const double c = 2.0 * a(0, 1) / (4.0 * hx * hy);
        add(ell_t, ell_s, n, i + 1, j + 1, c);
        add(ell_t, ell_s, n, i + 1, j - 1, -c);
        add(ell_t, ell_s, n, i - 1, j + 1, -c);
        add(ell_t, ell_s, n, i - 1, j - 1, c);
      }
    }
  }

  auto build = [&](const std::vector<Trip>& t, int cols) {
    Eigen::SparseMatrix<double> m(n_nodes, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.prune(0.0);
    return m;
  };
  for (int k = 0; k < g.dim(); ++k) {
    gradient_[k] = build(grad_t[k], n_nodes);
    gradient_slope_[k] = build(grad_s[k], 2 * n_nodes);
  }
  elliptic_ = build(ell_t, n_nodes);
  elliptic_slope_ = build(ell_s, 2 * n_nodes);
}

Eigen::VectorXd JetStencil::slope_vector(const ClampedData& data) const {
  data.validate(*grid_);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * grid_->num_nodes());
  for (int n : grid_->boundary()) {
    s[2 * n] = data.outward_slope[n][0];
    s[2 * n + 1] = data.outward_slope[n][1];
  }
  return s;
}

AffineOperator JetStencil::gradient(int axis, const ClampedData& data) const {
  if (axis < 0 || axis >= grid_->dim()) throw InvalidArgument("gradient axis out of range");
  return {gradient_[axis], gradient_slope_[axis] * slope_vector(data)};
}

AffineOperator JetStencil::elliptic(const ClampedData& data) const {
  return {elliptic_, elliptic_slope_ * slope_vector(data)};
}

Eigen::VectorXd JetStencil::elliptic_adjoint(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  const auto w = grid_->weights();
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd out = elliptic_.transpose() * wv.cwiseProduct(v);
  for (Eigen::Index n = 0; n < out.size(); ++n) out[n] = wv[n] > 0.0 ? out[n] / wv[n] : 0.0;
  return out;
}

namespace {

Eigen::VectorXd with_boundary_values(const ScalarField& u, const ClampedData& data) {
  Eigen::VectorXd v = u.as_vector();
  for (int n : u.grid().boundary()) v[n] = data.value[n];
  return v;
}

Jet2Field assemble_jet(const JetStencil& stencil, const Eigen::VectorXd& u,
                       const std::array<Eigen::VectorXd, 2>& grad, const Eigen::VectorXd& ell) {
  const Grid& g = stencil.grid();
  Jet2Field jet;
  jet.grid = stencil.grid_ptr();
  jet.value.assign(u.data(), u.data() + u.size());
  jet.gradient.assign(g.num_nodes(), Vec2{0.0, 0.0});
  for (int k = 0; k < g.dim(); ++k) {
    for (int n = 0; n < g.num_nodes(); ++n) jet.gradient[n][k] = grad[k][n];
  }
  jet.elliptic.assign(ell.data(), ell.data() + ell.size());
  return jet;
}

}  // namespace

Jet2Field compute_jet(const JetStencil& stencil, const ScalarField& u, const ClampedData& data) {
  if (!u.grid().same_layout(stencil.grid())) throw InvalidArgument("field and stencil grids differ");
  const Eigen::VectorXd v = with_boundary_values(u, data);
  std::array<Eigen::VectorXd, 2> grad;
  for (int k = 0; k < stencil.grid().dim(); ++k) grad[k] = stencil.gradient(k, data).apply(v);
  return assemble_jet(stencil, v, grad, stencil.elliptic(data).apply(v));
}

Jet2Field compute_variation_jet(const JetStencil& stencil, const ScalarField& psi) {
  if (!psi.grid().same_layout(stencil.grid())) throw InvalidArgument("field and stencil grids differ");
  const Eigen::VectorXd v = psi.as_vector();
  std::array<Eigen::VectorXd, 2> grad;
  for (int k = 0; k < stencil.grid().dim(); ++k) grad[k] = stencil.gradient_matrix(k) * v;
  return assemble_jet(stencil, v, grad, stencil.elliptic_matrix() * v);
}

double weighted_dot(const Grid& grid, std::span<const double> a, std::span<const double> b) {
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) s += w[n] * a[n] * b[n];
  return s;
}

}  // namespace supremal
