#pragma once

// p-continuation: minimize the penalized L^p energy along an increasing
// ladder of exponents, warm-starting every stage from the previous one.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "supremal/lp_energy.hpp"

namespace supremal {

enum class EpsilonPolicy {
  kFixed,     // one anchor for the whole ladder
  kAnchored,  // anchor re-centered at the previous stage solution
};

std::vector<double> default_ladder();  // 2, 4, ..., 256

struct ContinuationSchedule {
  std::vector<double> ladder = default_ladder();
  double tolerance = 1e-8;  // gradient threshold is tolerance * (1 + e_p)
  int max_iterations = 500;
  double epsilon = 0.0;
  EpsilonPolicy policy = EpsilonPolicy::kFixed;
  bool early_stop = true;
  /// Penalty anchor for the fixed policy (and the first anchored stage);
  /// defaults to the initial field.
  std::optional<ScalarField> anchor;

  void validate() const;
};

struct StageStats {
  double p = 2.0;
  double e_p = 0.0;
  double energy = 0.0;
  double initial_energy = 0.0;
  double sup = 0.0;  // discrete max of |F(J^2 u_p)|
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination;  // converged | rounding | degenerate | max_iterations | line_search | coercivity
  std::vector<double> energy_trace;  // energy after every accepted step, starting with the initial value
  double guard_lhs = 0.0;
  double guard_rhs = 0.0;
};

struct StageResult {
  ScalarField u;
  std::optional<DualFields> duals;
  StageStats stats;
};

/// Damped Newton on the convex model Hessian with Armijo backtracking.
StageResult solve_stage(const Problem& problem, const ScalarField& u_init, const LpEnergyConfig& cfg,
                        const ContinuationSchedule& schedule);

struct ContinuationReport {
  std::vector<StageStats> stages;
  std::optional<ScalarField> u;
  std::optional<DualFields> duals;
  double f_inf = 0.0;          // discrete max of |F(J^2 u)| for the optimized F
  double wrapped_f_inf = 0.0;  // the same through Phi for wrapped specs
  bool success = false;
  bool early_stopped = false;
  bool e_trace_monotone = true;  // within 1e-6 absolute slack
  std::string error;
  double wall_seconds = 0.0;
};

/// Least-squares fit of A:D^2 u to the mean zero level, under the clamped data.
ScalarField initial_field(const Problem& problem);

/// Called after every accepted stage with its stats and solution.
using StageObserver = std::function<void(const StageStats&, const ScalarField&)>;

ContinuationReport continuation_solve(const Problem& problem, const ContinuationSchedule& schedule,
                                      const std::optional<ScalarField>& initial = std::nullopt,
                                      const StageObserver& observer = {});

struct CoercivityReport {
  bool pass = true;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Checks ||A:D^2 u||_q <= (1 + delta + F_inf(anchor) + ||u||_{W^{1,q}}^alpha) / c
/// with normalized norms.
CoercivityReport coercivity_guard(const Problem& problem, const ScalarField& u, double q,
                                  const ScalarField& anchor, double delta = 0.0);

/// Norm of energy gradients dual to u -> ||A:D^2 u||_{L^2} on interior
/// unknowns. Scale-free in h, so stopping thresholds transfer across grids.
class GradientMetric {
 public:
  explicit GradientMetric(const Problem& problem);
  double dual_norm(const Eigen::VectorXd& node_gradient) const;

 private:
  GridPtr grid_;
  Eigen::SparseMatrix<double> metric_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace supremal
