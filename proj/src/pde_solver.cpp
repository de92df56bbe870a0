#include "supremal/pde_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include "supremal/error.hpp"

namespace supremal {

DualMode parse_dual_mode(const std::string& name) {
  if (name == "unit_boundary") return DualMode::kUnitBoundary;
  if (name == "null_vector") return DualMode::kNullVector;
  if (name == "auto") return DualMode::kAuto;
  throw InvalidArgument("unknown dual mode '" + name + "' (expected unit_boundary, null_vector or auto)");
}

std::string to_string(DualMode mode) {
  switch (mode) {
    case DualMode::kUnitBoundary: return "unit_boundary";
    case DualMode::kNullVector: return "null_vector";
    case DualMode::kAuto: return "auto";
  }
  return "auto";
}

DualProblem make_dual_problem(const Problem& problem, const ScalarField& u, DualMode mode) {
  const Grid& g = problem.grid();
  const ScalarField v = feasible_field(problem, u);
  DualProblem dp{problem.stencil, ScalarField::zeros(problem.grid_ptr()), {}, mode, {}, {}};
  transport_coefficients(problem, v, &dp.k, &dp.l);

  const std::vector<double> fv = supremand_values(problem, v);
  double scale = 0.0;
  scale = measured_max(g, fv);
  const double zero_tol = 1e-14 * scale;
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (!g.measured(n)) {
      // no equation reaches a corner; tie it to its diagonal neighbour
      dp.interfaces.push_back({n, g.support_node(n), 1.0, -1.0});
      continue;
    }
    if (std::abs(fv[n]) <= zero_tol && scale > 0.0) {
      dp.interfaces.push_back({n, n, 1.0, 0.0});
      continue;
    }
    const auto [i, j] = g.multi_index(n);
    std::vector<int> next;
    if (i + 1 < g.nodes_along(0)) next.push_back(g.index(i + 1, j));
    if (g.dim() == 2 && j + 1 < g.nodes_along(1)) next.push_back(g.index(i, j + 1));
    for (int m : next) {
      if (std::abs(fv[m]) <= zero_tol || !g.measured(m)) continue;
      if ((fv[n] < 0.0) != (fv[m] < 0.0)) {
        // f vanishes where the linear interpolant of F does
        dp.interfaces.push_back({n, m, std::abs(fv[m]), std::abs(fv[n])});
      }
    }
  }
  return dp;
}

Eigen::SparseMatrix<double> assemble(const DualProblem& dp) {
  const JetStencil& st = *dp.stencil;
  const Grid& g = st.grid();
  const int n = g.num_nodes();
  if (dp.k.size() != n || static_cast<int>(dp.l.size()) != n) {
    throw InvalidArgument("dual problem: coefficient fields do not match the grid");
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(dp.k[i]) || !std::isfinite(dp.l[i][0]) || !std::isfinite(dp.l[i][1])) {
      throw InvalidArgument("dual problem: non-finite coefficient at node " + std::to_string(i));
    }
  }
  const auto w = g.weights();
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
  Eigen::SparseMatrix<double> m = st.elliptic_matrix().transpose() * wv.asDiagonal();
  for (int a = 0; a < g.dim(); ++a) {
    Eigen::VectorXd wl(n);
    for (int i = 0; i < n; ++i) wl[i] = w[i] * dp.l[i][a];
    m += Eigen::SparseMatrix<double>(st.gradient_matrix(a).transpose() * wl.asDiagonal());
  }
  for (int i = 0; i < n; ++i) {
    if (dp.k[i] != 0.0) m.coeffRef(i, i) += w[i] * dp.k[i];
  }

  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  Eigen::SparseMatrix<double> sel(ni, n);
  std::vector<Eigen::Triplet<double>> t;
  for (int r = 0; r < ni; ++r) t.emplace_back(r, interior[r], 1.0 / w[interior[r]]);
  sel.setFromTriplets(t.begin(), t.end());
  Eigen::SparseMatrix<double> out = sel * m;
  out.prune(0.0);
  return out;
}

ScalarField normalize_dual(const ScalarField& f) {
  const Grid& g = f.grid();
  const auto w = g.weights();
  double l1 = 0.0, big = 0.0;
  int arg = 0;
  for (int n = 0; n < f.size(); ++n) {
    l1 += w[n] * std::abs(f[n]);
    if (g.measured(n) && std::abs(f[n]) > big) {
      big = std::abs(f[n]);
      arg = n;
    }
  }
  if (!(l1 > 0.0)) throw NumericalError("dual field vanishes identically");
  const double scale = (f[arg] < 0.0 ? -1.0 : 1.0) / l1;
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= scale;
  return ScalarField(f.grid_ptr(), std::move(v));
}

int count_sign_changes(const ScalarField& f) {
  const Grid& g = f.grid();
  int count = 0;
  if (g.dim() == 1) {
    // exact zeros between opposite signs count once
    int last = 0;
    for (int n = 0; n < g.num_nodes(); ++n) {
      const int s = (f[n] > 0.0) - (f[n] < 0.0);
      if (s == 0) continue;
      if (last != 0 && s != last) ++count;
      last = s;
    }
    return count;
  }
  for (int i = 0; i + 1 < g.nodes_along(0); ++i) {
    for (int j = 0; j + 1 < g.nodes_along(1); ++j) {
      const double c[4] = {f[g.index(i, j)], f[g.index(i + 1, j)], f[g.index(i, j + 1)], f[g.index(i + 1, j + 1)]};
      const bool pos = std::any_of(c, c + 4, [](double x) { return x > 0.0; });
      const bool neg = std::any_of(c, c + 4, [](double x) { return x < 0.0; });
      if (pos && neg) ++count;
    }
  }
  return count;
}

namespace {

bool solve_unit_boundary(const DualProblem& dp, const Eigen::SparseMatrix<double>& t, std::vector<double>& f) {
  const Grid& g = dp.stencil->grid();
  const int n = g.num_nodes();
  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  f.assign(n, 1.0);
  if (!dp.boundary_values.empty()) {
    if (static_cast<int>(dp.boundary_values.size()) != n) {
      throw InvalidArgument("dual problem: boundary values must be indexed by node");
    }
    for (int b : g.boundary()) f[b] = dp.boundary_values[b];
  }
  Eigen::SparseMatrix<double> sel_i(n, ni);
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < ni; ++i) tr.emplace_back(interior[i], i, 1.0);
  sel_i.setFromTriplets(tr.begin(), tr.end());
  Eigen::VectorXd fb = Eigen::VectorXd::Zero(n);
  for (int b : g.boundary()) fb[b] = f[b];
  const Eigen::SparseMatrix<double> ti = t * sel_i;
  const Eigen::VectorXd rhs = -(t * fb);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(ti);
  if (lu.info() != Eigen::Success) return false;
  const Eigen::VectorXd fi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !fi.allFinite()) return false;
  const double res = (ti * fi - rhs).norm();
  if (res > 1e-8 * (rhs.norm() + ti.norm() * fi.norm())) return false;
  for (int i = 0; i < ni; ++i) f[interior[i]] = fi[i];
  return true;
}

void solve_null_vector(const DualProblem& dp, const Eigen::SparseMatrix<double>& t, std::vector<double>& f,
                       DualSolution& sol) {
  const Grid& g = dp.stencil->grid();
  const int n = g.num_nodes();
  if (n > 4096) throw NumericalError("null-vector mode is limited to 4096 nodes (dense SVD)");
  const int rows = static_cast<int>(t.rows() + dp.interfaces.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(std::max(rows, n), n);
  const Eigen::MatrixXd td = Eigen::MatrixXd(t);
  for (int r = 0; r < td.rows(); ++r) {
    const double nr = td.row(r).norm();
    if (nr > 0.0) s.row(r) = td.row(r) / nr;
  }
  for (std::size_t c = 0; c < dp.interfaces.size(); ++c) {
    const auto& ic = dp.interfaces[c];
    const int r = static_cast<int>(td.rows() + c);
    s(r, ic.node_a) += ic.weight_a;
    s(r, ic.node_b) += ic.weight_b;
    const double nr = s.row(r).norm();
    if (nr > 0.0) s.row(r) /= nr;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  sol.null_dimension = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] <= 1e-8 * smax) ++sol.null_dimension;
  }
  sol.smallest_singular_value = sv[sv.size() - 1];
  const Eigen::VectorXd v = svd.matrixV().col(n - 1);
  f.assign(v.data(), v.data() + n);
}

}  // namespace

DualSolution solve_dual(const DualProblem& dp) {
  const Eigen::SparseMatrix<double> t = assemble(dp);
  const GridPtr& grid = dp.stencil->grid_ptr();
  DualSolution sol{ScalarField::zeros(grid)};
  std::vector<double> f;
  bool done = false;
  if (dp.mode != DualMode::kNullVector) {
    done = solve_unit_boundary(dp, t, f);
    sol.mode_used = DualMode::kUnitBoundary;
    if (!done) sol.fell_back = true;
  }
  if (!done) {
    solve_null_vector(dp, t, f, sol);
    sol.mode_used = DualMode::kNullVector;
  }
  ScalarField raw(grid, std::move(f));
  const auto w = grid->weights();
  for (int i = 0; i < raw.size(); ++i) sol.l1_norm_before += w[i] * std::abs(raw[i]);
  sol.f = normalize_dual(raw);
  sol.nodal_count = count_sign_changes(sol.f);
  return sol;
}

}  // namespace supremal
