#pragma once

// Penalized discrete L^p energy of F(J^2 u), its gradient, a Newton model,
// and the dual quantities read off a stage solution.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "supremal/grid.hpp"
#include "supremal/supremand.hpp"

namespace supremal {

/// Grid, operator, supremand and clamped data of one variational problem.
struct Problem {
  std::shared_ptr<const JetStencil> stencil;
  std::shared_ptr<const SupremandSpec> spec;
  ClampedData data;
  /// Stacked jet Jacobian: row m*node + r is the derivative of jet slot r
  /// (value, gradient components, elliptic trace) at node; m = dim + 2.
  std::shared_ptr<const Eigen::SparseMatrix<double>> jet_jacobian;

  const Grid& grid() const { return stencil->grid(); }
  const GridPtr& grid_ptr() const { return stencil->grid_ptr(); }
  const EllipticMatrix& matrix_a() const { return stencil->matrix_a(); }
  /// The function actually minimized (the inner F of a wrapped spec).
  const SupremandSpec& target() const { return spec->optimization_target(); }
};

Problem make_problem(GridPtr grid, const EllipticMatrix& a, SupremandSpec spec, ClampedData data);

/// Node values are replaced by the clamped data on the boundary.
ScalarField feasible_field(const Problem& problem, const ScalarField& u);

struct LpEnergyConfig {
  double p = 2.0;
  double epsilon = 0.0;
  std::optional<ScalarField> anchor;  // required when epsilon > 0
};

struct NodalSupremand {
  Jet2Field jet;
  std::vector<SupremandValue> values;
};

/// F and (order >= 1) its partials at every node, for the target supremand.
NodalSupremand evaluate_supremand(const Problem& problem, const ScalarField& u, int order);
std::vector<double> supremand_values(const Problem& problem, const ScalarField& u);
/// Discrete max of |F(J^2 u)|.
/// Largest |value| over nodes with positive quadrature weight.
double measured_max(const Grid& grid, std::span<const double> values);
double discrete_sup(const Problem& problem, const ScalarField& u);

/// (sum_i w_i |v_i|^p)^(1/p), evaluated with the max factored out.
double lp_norm(const Grid& grid, std::span<const double> values, double p);

double energy(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg);

struct EnergyDerivatives {
  double energy = 0.0;
  double e_p = 0.0;
  double sup = 0.0;
  /// d energy / d u_j at every node (zero on the boundary, where values are fixed).
  Eigen::VectorXd gradient;
  /// Convex model of the Hessian on interior unknowns (grid.interior() order):
  /// the per-node Hessians of |F|^p clamped to be positive semidefinite and
  /// the negative rank-one term of the root dropped. Filled on request.
  Eigen::SparseMatrix<double> model_hessian;
};

/// Throws NumericalError when e_p = 0 and epsilon = 0 (root not differentiable).
EnergyDerivatives energy_derivatives(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg,
                                     bool with_hessian);
Eigen::VectorXd energy_gradient(const Problem& problem, const ScalarField& u, const LpEnergyConfig& cfg);

struct DualFields {
  double p = 2.0;
  double e_p = 0.0;
  ScalarField f;
  ScalarField k;              // dF/deta / dF/dxi
  std::vector<Vec2> l;        // dF/dp / dF/dxi
};

/// Log-domain evaluation of e^(1-p) |F|^(p-2) F dF/dxi at every node.
/// Throws NumericalError if e_p = 0 or an entry overflows.
DualFields extract_duals(const Problem& problem, const ScalarField& u, double p);

/// Drift and potential coefficients dF/dp / dF/dxi, dF/deta / dF/dxi at J^2 u.
void transport_coefficients(const Problem& problem, const ScalarField& u, ScalarField* k, std::vector<Vec2>* l);

}  // namespace supremal
