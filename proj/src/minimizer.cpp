#include "supremal/minimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/SparseCholesky>

#include "supremal/error.hpp"

namespace supremal {

std::vector<double> default_ladder() {
  std::vector<double> l;
  for (double p = 2.0; p <= 256.0; p *= 2.0) l.push_back(p);
  return l;
}

void ContinuationSchedule::validate() const {
  if (ladder.empty()) throw InvalidArgument("schedule: empty p ladder");
  if (!(ladder.front() >= 2.0)) throw InvalidArgument("schedule: ladder must start at p >= 2");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (!(ladder[i] > ladder[i - 1])) throw InvalidArgument("schedule: ladder must be strictly increasing");
  }
  if (!std::isfinite(ladder.back())) throw InvalidArgument("schedule: ladder entries must be finite");
  if (!(tolerance > 0.0)) throw InvalidArgument("schedule: tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("schedule: max_iterations must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("schedule: epsilon must be >= 0");
}

GradientMetric::GradientMetric(const Problem& problem) : grid_(problem.grid_ptr()) {
  const Grid& g = problem.grid();
  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  Eigen::SparseMatrix<double> sel(g.num_nodes(), ni);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < ni; ++i) t.emplace_back(interior[i], i, 1.0);
  sel.setFromTriplets(t.begin(), t.end());
  const Eigen::SparseMatrix<double> ei = problem.stencil->elliptic_matrix() * sel;
  const auto w = g.weights();
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), g.num_nodes());
  const Eigen::SparseMatrix<double> wei = wv.asDiagonal() * ei;
  metric_ = ei.transpose() * wei;
  ldlt_.compute(metric_);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("gradient metric is singular");
}

double GradientMetric::dual_norm(const Eigen::VectorXd& node_gradient) const {
  const auto& interior = grid_->interior();
  Eigen::VectorXd gi(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); ++i) gi[static_cast<Eigen::Index>(i)] = node_gradient[interior[i]];
  return std::sqrt(std::max(0.0, gi.dot(ldlt_.solve(gi))));
}

namespace {

ScalarField step_field(const ScalarField& u, const std::vector<int>& interior, const Eigen::VectorXd& s, double t) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (std::size_t i = 0; i < interior.size(); ++i) v[interior[i]] += t * s[static_cast<Eigen::Index>(i)];
  return ScalarField(u.grid_ptr(), std::move(v));
}

// Newton direction on interior unknowns; Levenberg shift if the model is
// not positive definite or the direction is not a descent direction.
bool newton_direction(const Eigen::SparseMatrix<double>& h, const Eigen::VectorXd& g, Eigen::VectorXd& s) {
  const double diag_scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.analyzePattern(h);
  double shift = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::SparseMatrix<double> m = h;
    if (shift > 0.0) {
      for (int i = 0; i < m.rows(); ++i) m.coeffRef(i, i) += shift;
    }
    ldlt.factorize(m);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
      s = ldlt.solve(-g);
      if (s.allFinite() && g.dot(s) < 0.0) return true;
    }
    shift = shift == 0.0 ? 1e-12 * diag_scale : 10.0 * shift;
  }
  return false;
}

double weighted_spread(const Grid& grid, const std::vector<double>& f, double sup) {
  if (sup == 0.0) return 0.0;
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += w[n] * (sup - std::abs(f[n]));
  return s / sup;
}

}  // namespace

StageResult solve_stage(const Problem& problem, const ScalarField& u_init, const LpEnergyConfig& cfg,
                        const ContinuationSchedule& schedule) {
  const Grid& g = problem.grid();
  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  const GradientMetric metric(problem);
  ScalarField u = feasible_field(problem, u_init);
  StageResult res{u, std::nullopt, {}};
  StageStats& st = res.stats;
  st.p = cfg.p;

  auto finish = [&](const std::string& why, bool ok) {
    st.termination = why;
    st.converged = ok;
    res.u = u;
  };

  for (int it = 0;; ++it) {
    const std::vector<double> fv = supremand_values(problem, u);
    const double e = lp_norm(g, fv, cfg.p);
    if (e < 1e-12) {
      st.e_p = e;
      st.energy = energy(problem, u, cfg);
      if (it == 0) st.initial_energy = st.energy;
      st.energy_trace.push_back(st.energy);
      st.sup = measured_max(problem.grid(), fv);
      st.iterations = it;
      finish("degenerate", true);
      return res;
    }
    const EnergyDerivatives d = energy_derivatives(problem, u, cfg, true);
    st.e_p = d.e_p;
    st.energy = d.energy;
    st.sup = d.sup;
    st.iterations = it;
    if (it == 0) st.initial_energy = d.energy;
    if (st.energy_trace.empty() || st.energy_trace.back() != d.energy) st.energy_trace.push_back(d.energy);
    st.gradient_norm = metric.dual_norm(d.gradient);
    if (st.gradient_norm <= schedule.tolerance * (1.0 + d.e_p)) {
      finish("converged", true);
      return res;
    }
    if (it >= schedule.max_iterations) {
      finish("max_iterations", false);
      return res;
    }

    Eigen::VectorXd gi(ni);
    for (int i = 0; i < ni; ++i) gi[i] = d.gradient[interior[i]];
    Eigen::VectorXd s;
    if (!newton_direction(d.model_hessian, gi, s)) {
      s = -gi;
      for (int i = 0; i < ni; ++i) s[i] /= g.weights()[interior[i]];
    }
    const double slope = gi.dot(s);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const ScalarField trial = step_field(u, interior, s, t);
      double et = 0.0;
      try {
        et = energy(problem, trial, cfg);
      } catch (const NumericalError&) {
        continue;
      }
      if (std::isfinite(et) && et <= d.energy + 1e-4 * t * slope) {
        u = trial;
        accepted = et < d.energy;
        break;
      }
    }
    if (!accepted) {
      // predicted decrease already at the rounding level of the energy
      const bool rounding = std::abs(slope) <= 1e-13 * std::max(1.0, d.energy);
      finish(rounding ? "rounding" : "line_search", rounding);
      return res;
    }
  }
}

ScalarField initial_field(const Problem& problem) {
  const Grid& g = problem.grid();
  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  const SupremandSpec& f = problem.target();
  double target = 0.0;
  const auto w = g.weights();
  for (int n = 0; n < g.num_nodes(); ++n) target += w[n] * f.zero_level(g.position(n), 0.0, {0.0, 0.0});

  // xi = E_I u_I + rest, rest from boundary values and slopes
  std::vector<double> base(g.num_nodes(), 0.0);
  for (int n : g.boundary()) base[n] = problem.data.value[n];
  const Eigen::VectorXd rest = problem.stencil->elliptic(problem.data).apply(
      Eigen::Map<const Eigen::VectorXd>(base.data(), g.num_nodes()));

  Eigen::SparseMatrix<double> sel(g.num_nodes(), ni);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < ni; ++i) t.emplace_back(interior[i], i, 1.0);
  sel.setFromTriplets(t.begin(), t.end());
  const Eigen::SparseMatrix<double> ei = problem.stencil->elliptic_matrix() * sel;
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), g.num_nodes());
  const Eigen::SparseMatrix<double> wei = wv.asDiagonal() * ei;
  const Eigen::SparseMatrix<double> normal = ei.transpose() * wei;
  const Eigen::VectorXd rhs = wei.transpose() * (Eigen::VectorXd::Constant(g.num_nodes(), target) - rest);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericalError("initial field: normal equations are singular");
  const Eigen::VectorXd ui = ldlt.solve(rhs);
  std::vector<double> v = base;
  for (int i = 0; i < ni; ++i) v[interior[i]] = ui[i];
  return ScalarField(problem.grid_ptr(), std::move(v));
}

CoercivityReport coercivity_guard(const Problem& problem, const ScalarField& u, double q, const ScalarField& anchor,
                                  double delta) {
  const Grid& g = problem.grid();
  const ScalarField v = feasible_field(problem, u);
  const Jet2Field jet = compute_jet(*problem.stencil, v, problem.data);
  std::vector<double> grad_mag(g.num_nodes());
  for (int n = 0; n < g.num_nodes(); ++n) grad_mag[n] = std::hypot(jet.gradient[n][0], jet.gradient[n][1]);
  const double w1q = lp_norm(g, jet.value, q) + lp_norm(g, grad_mag, q);
  CoercivityReport r;
  r.lhs = lp_norm(g, jet.elliptic, q);
  const SupremandSpec& f = problem.target();
  r.rhs = (1.0 + std::max(0.0, delta) + discrete_sup(problem, anchor) + std::pow(w1q, f.alpha())) / f.c();
  r.pass = r.lhs <= r.rhs;
  return r;
}

ContinuationReport continuation_solve(const Problem& problem, const ContinuationSchedule& schedule,
                                      const std::optional<ScalarField>& initial, const StageObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  schedule.validate();
  ContinuationReport rep;
  ScalarField u = feasible_field(problem, initial ? *initial : initial_field(problem));
  ScalarField anchor = schedule.anchor ? *schedule.anchor : u;
  if (!anchor.grid().same_layout(problem.grid())) throw InvalidArgument("schedule anchor lives on a different grid");

  double prev_spread = -1.0;
  for (std::size_t k = 0; k < schedule.ladder.size(); ++k) {
    LpEnergyConfig cfg;
    cfg.p = schedule.ladder[k];
    cfg.epsilon = schedule.epsilon;
    if (cfg.epsilon > 0.0) cfg.anchor = anchor;
    StageResult sr = solve_stage(problem, u, cfg, schedule);
    if (sr.stats.converged && sr.stats.termination != "degenerate") {
      const double delta = std::max(0.0, sr.stats.energy - discrete_sup(problem, anchor));
      const CoercivityReport guard = coercivity_guard(problem, sr.u, cfg.p, anchor, delta);
      sr.stats.guard_lhs = guard.lhs;
      sr.stats.guard_rhs = guard.rhs;
      if (!guard.pass) {
        sr.stats.converged = false;
        sr.stats.termination = "coercivity";
      }
    }
    rep.stages.push_back(sr.stats);
    u = sr.u;
    if (!sr.stats.converged) {
      rep.u = u;
      rep.error = "stage p=" + std::to_string(cfg.p) + " failed: " + sr.stats.termination;
      rep.f_inf = discrete_sup(problem, u);
      rep.wrapped_f_inf = problem.spec->outer(rep.f_inf);
      rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return rep;
    }
    if (observer) observer(sr.stats, u);
    if (k > 0 && rep.stages[k].e_p < rep.stages[k - 1].e_p - 1e-6) rep.e_trace_monotone = false;
    if (schedule.policy == EpsilonPolicy::kAnchored) anchor = u;
    if (sr.stats.termination == "degenerate") break;

    const double spread = weighted_spread(problem.grid(), supremand_values(problem, u), sr.stats.sup);
    if (schedule.early_stop && k > 0) {
      const double e0 = rep.stages[k - 1].e_p, e1 = rep.stages[k].e_p;
      const bool flat = std::abs(e1 - e0) <= 1e-4 * e0;
      const bool stalled = spread >= 0.99 * prev_spread;
      if (flat && stalled && k + 1 < schedule.ladder.size()) {
        rep.early_stopped = true;
        break;
      }
    }
    prev_spread = spread;
  }

  rep.u = u;
  rep.f_inf = discrete_sup(problem, u);
  rep.wrapped_f_inf = problem.spec->outer(rep.f_inf);
  if (rep.stages.back().termination != "degenerate" && rep.stages.back().e_p >= 1e-12) {
    rep.duals = extract_duals(problem, u, rep.stages.back().p);
  }
  rep.success = true;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace supremal
