#include "supremal/lp_energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "supremal/error.hpp"

namespace supremal {

namespace {

Eigen::SparseMatrix<double> build_jet_jacobian(const JetStencil& st) {
  const Grid& g = st.grid();
  const int m = g.dim() + 2;
  const int n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < n; ++k) t.emplace_back(m * k, k, 1.0);
  auto add_rows = [&](const Eigen::SparseMatrix<double>& mat, int slot) {
    for (int col = 0; col < mat.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, col); it; ++it) {
        t.emplace_back(m * static_cast<int>(it.row()) + slot, static_cast<int>(it.col()), it.value());
      }
    }
  };
  for (int k = 0; k < g.dim(); ++k) add_rows(st.gradient_matrix(k), 1 + k);
  add_rows(st.elliptic_matrix(), g.dim() + 1);
  Eigen::SparseMatrix<double> b(m * n, n);
  b.setFromTriplets(t.begin(), t.end());
  return b;
}

void check_config(const Problem& problem, const LpEnergyConfig& cfg) {
  if (!(cfg.p >= 2.0) || !std::isfinite(cfg.p)) throw InvalidArgument("energy: p must be finite and >= 2");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) throw InvalidArgument("energy: epsilon must be >= 0");
  if (cfg.epsilon > 0.0) {
    if (!cfg.anchor) throw InvalidArgument("energy: epsilon > 0 requires an anchor field");
    if (!cfg.anchor->grid().same_layout(problem.grid())) throw InvalidArgument("energy: anchor on a different grid");
  }
}

double penalty(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg) {
  if (cfg.epsilon == 0.0) return 0.0;
  const auto w = problem.grid().weights();
  double s = 0.0;
  for (int n = 0; n < u.size(); ++n) {
    const double d = u[n] - (*cfg.anchor)[n];
    s += w[n] * d * d;
  }
  return 0.5 * cfg.epsilon * s;
}

// |r|^(p-2) r computed as sign(r) exp((p-1) log|r|)
double signed_power(double r, double q) {
  if (r == 0.0) return 0.0;
  return std::copysign(std::exp(q * std::log(std::abs(r))), r);
}

}  // namespace

Problem make_problem(GridPtr grid, const EllipticMatrix& a, SupremandSpec spec, ClampedData data) {
  if (spec.dim() != grid->dim()) throw InvalidArgument("supremand dimension does not match the grid");
  data.validate(*grid);
  Problem p;
  p.stencil = std::make_shared<const JetStencil>(grid, a);
  p.spec = std::make_shared<const SupremandSpec>(std::move(spec));
  p.data = std::move(data);
  p.jet_jacobian = std::make_shared<const Eigen::SparseMatrix<double>>(build_jet_jacobian(*p.stencil));
  return p;
}

ScalarField feasible_field(const Problem& problem, const ScalarField& u) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (int n : problem.grid().boundary()) v[n] = problem.data.value[n];
  return ScalarField(u.grid_ptr(), std::move(v));
}

NodalSupremand evaluate_supremand(const Problem& problem, const ScalarField& u, int order) {
  NodalSupremand out;
  out.jet = compute_jet(*problem.stencil, u, problem.data);
  const Grid& g = problem.grid();
  const SupremandSpec& f = problem.target();
  out.values.resize(g.num_nodes());
  for (int n = 0; n < g.num_nodes(); ++n) {
    const JetVector z = make_jet_argument(g.dim(), out.jet.value[n], out.jet.gradient[n], out.jet.elliptic[n]);
    out.values[n] = f.evaluate(g.position(n), z, order);
    if (!std::isfinite(out.values[n].value)) {
      throw NumericalError("supremand is not finite at node " + std::to_string(n));
    }
  }
  return out;
}

std::vector<double> supremand_values(const Problem& problem, const ScalarField& u) {
  const NodalSupremand ns = evaluate_supremand(problem, u, 0);
  std::vector<double> v(ns.values.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = ns.values[n].value;
  return v;
}

double discrete_sup(const Problem& problem, const ScalarField& u) {
  return measured_max(problem.grid(), supremand_values(problem, u));
}

double measured_max(const Grid& grid, std::span<const double> values) {
  double m = 0.0;
  for (int n = 0; n < grid.num_nodes(); ++n) {
    if (grid.measured(n)) m = std::max(m, std::abs(values[n]));
  }
  return m;
}

double lp_norm(const Grid& grid, std::span<const double> values, double p) {
  const auto w = grid.weights();
  const double m = measured_max(grid, values);
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) {
    if (values[n] != 0.0 && w[n] > 0.0) s += w[n] * std::exp(p * std::log(std::abs(values[n]) / m));
  }
  return m * std::pow(s, 1.0 / p);
}

double energy(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg) {
  check_config(problem, cfg);
  const ScalarField v = feasible_field(problem, u);
  return lp_norm(problem.grid(), supremand_values(problem, v), cfg.p) + penalty(problem, v, cfg);
}

EnergyDerivatives energy_derivatives(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg,
                                     bool with_hessian) {
  check_config(problem, cfg);
  const Grid& g = problem.grid();
  const int m = g.dim() + 2;
  const int n_nodes = g.num_nodes();
  const auto w = g.weights();
  const ScalarField v = feasible_field(problem, u);
  const NodalSupremand ns = evaluate_supremand(problem, v, with_hessian ? 2 : 1);

  std::vector<double> fv(n_nodes);
  for (int n = 0; n < n_nodes; ++n) fv[n] = ns.values[n].value;
  EnergyDerivatives out;
  out.e_p = lp_norm(g, fv, cfg.p);
  out.sup = measured_max(g, fv);
  out.energy = out.e_p + penalty(problem, v, cfg);
  if (out.e_p == 0.0 && cfg.epsilon == 0.0) {
    throw NumericalError("energy gradient undefined: e_p = 0 (degenerate minimum reached)");
  }

  const Eigen::SparseMatrix<double>& b = *problem.jet_jacobian;
  Eigen::VectorXd slot(m * n_nodes);
  slot.setZero();
  std::vector<Eigen::Triplet<double>> local;
  Eigen::SelfAdjointEigenSolver<JetMatrix> eig;
  if (out.e_p > 0.0) {
    for (int n = 0; n < n_nodes; ++n) {
      if (w[n] == 0.0) continue;
      const SupremandValue& f = ns.values[n];
      const double r = f.value / out.e_p;
      const double c1 = signed_power(r, cfg.p - 1.0);
      slot.segment(m * n, m) = w[n] * c1 * f.gradient;
      if (with_hessian) {
        const double c2 = r == 0.0 ? (cfg.p == 2.0 ? 1.0 : 0.0) : std::exp((cfg.p - 2.0) * std::log(std::abs(r)));
        JetMatrix h = ((cfg.p - 1.0) / out.e_p * c2) * (f.gradient * f.gradient.transpose()) + c1 * f.hessian;
        eig.compute(h);
        const JetVector lam = eig.eigenvalues().cwiseMax(0.0);
        h = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < m; ++j) {
            if (h(i, j) != 0.0) local.emplace_back(m * n + i, m * n + j, w[n] * h(i, j));
          }
        }
      }
    }
  }
  out.gradient = b.transpose() * slot;
  for (int n : g.boundary()) out.gradient[n] = 0.0;
  if (cfg.epsilon > 0.0) {
    for (int n : g.interior()) out.gradient[n] += cfg.epsilon * w[n] * (v[n] - (*cfg.anchor)[n]);
  }

  if (with_hessian) {
    const auto& interior = g.interior();
    const int ni = static_cast<int>(interior.size());
    Eigen::SparseMatrix<double> sel(n_nodes, ni);
    std::vector<Eigen::Triplet<double>> st;
    for (int i = 0; i < ni; ++i) st.emplace_back(interior[i], i, 1.0);
    sel.setFromTriplets(st.begin(), st.end());
    Eigen::SparseMatrix<double> d(m * n_nodes, m * n_nodes);
    d.setFromTriplets(local.begin(), local.end());
    const Eigen::SparseMatrix<double> bi = b * sel;
    out.model_hessian = bi.transpose() * (d * bi);
    if (cfg.epsilon > 0.0) {
      for (int i = 0; i < ni; ++i) out.model_hessian.coeffRef(i, i) += cfg.epsilon * w[interior[i]];
    }
    out.model_hessian.makeCompressed();
  }
  return out;
}

Eigen::VectorXd energy_gradient(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg) {
  return energy_derivatives(problem, u, cfg, false).gradient;
}

void transport_coefficients(const Problem& problem, const ScalarField& u, ScalarField* k, std::vector<Vec2>* l) {
  const Grid& g = problem.grid();
  const NodalSupremand ns = evaluate_supremand(problem, feasible_field(problem, u), 1);
  std::vector<double> kv(g.num_nodes());
  std::vector<Vec2> lv(g.num_nodes(), Vec2{0.0, 0.0});
  const int xi = g.dim() + 1;
  for (int n = 0; n < g.num_nodes(); ++n) {
    const JetVector& d = ns.values[n].gradient;
    kv[n] = d[0] / d[xi];
    for (int a = 0; a < g.dim(); ++a) lv[n][a] = d[1 + a] / d[xi];
  }
  if (k) *k = ScalarField(u.grid_ptr(), std::move(kv));
  if (l) *l = std::move(lv);
}

DualFields extract_duals(const Problem& problem, const ScalarField& u, double p) {
  const Grid& g = problem.grid();
  const ScalarField v = feasible_field(problem, u);
  const NodalSupremand ns = evaluate_supremand(problem, v, 1);
  std::vector<double> fv(g.num_nodes());
  for (int n = 0; n < g.num_nodes(); ++n) fv[n] = ns.values[n].value;
  const double e = lp_norm(g, fv, p);
  if (!(e > 0.0)) throw NumericalError("dual extraction: e_p = 0");
  const double log_e = std::log(e);
  const int xi = g.dim() + 1;
  std::vector<double> f(g.num_nodes(), 0.0), kv(g.num_nodes());
  std::vector<Vec2> lv(g.num_nodes(), Vec2{0.0, 0.0});
  for (int n = 0; n < g.num_nodes(); ++n) {
    const JetVector& d = ns.values[n].gradient;
    kv[n] = d[0] / d[xi];
    for (int a = 0; a < g.dim(); ++a) lv[n][a] = d[1 + a] / d[xi];
    if (fv[n] == 0.0 || !g.measured(n)) continue;
    const double expo = (p - 1.0) * (std::log(std::abs(fv[n])) - log_e) + std::log(d[xi]);
    if (expo > 700.0) throw NumericalError("dual extraction overflows at node " + std::to_string(n));
    f[n] = std::copysign(std::exp(expo), fv[n]);
  }
  for (int n = 0; n < g.num_nodes(); ++n) f[n] = f[g.support_node(n)];
  DualFields out{p, e, ScalarField(u.grid_ptr(), std::move(f)), ScalarField(u.grid_ptr(), std::move(kv)), std::move(lv)};
  return out;
}

}  // namespace supremal
