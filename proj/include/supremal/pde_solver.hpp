#pragma once

// Linear divergence-form equation for the dual field: the weighted adjoint
// of psi -> A:D^2 psi + L.D psi + K psi, tested against clamped-zero psi.

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "supremal/lp_energy.hpp"

namespace supremal {

enum class DualMode { kUnitBoundary, kNullVector, kAuto };

DualMode parse_dual_mode(const std::string& name);
std::string to_string(DualMode mode);

/// Zero of f forced onto an edge where F(J^2 u) changes sign:
/// weight_a * f[node_a] + weight_b * f[node_b] = 0.
struct InterfaceConstraint {
  int node_a = 0;
  int node_b = 0;
  double weight_a = 0.0;
  double weight_b = 0.0;
};

struct DualProblem {
  std::shared_ptr<const JetStencil> stencil;
  ScalarField k;
  std::vector<Vec2> l;
  DualMode mode = DualMode::kAuto;
  /// Boundary values in unit-boundary mode, indexed by node (empty = all ones).
  std::vector<double> boundary_values;
  /// Used in null-vector mode only.
  std::vector<InterfaceConstraint> interfaces;
};

/// Coefficients at J^2 u and interface constraints from the sign changes of F(J^2 u).
DualProblem make_dual_problem(const Problem& problem, const ScalarField& u, DualMode mode);

/// Rows: interior nodes (grid.interior() order); columns: all nodes.
Eigen::SparseMatrix<double> assemble(const DualProblem& dp);

struct DualSolution {
  ScalarField f;
  DualMode mode_used = DualMode::kUnitBoundary;
  bool fell_back = false;
  int null_dimension = 0;  // null-vector mode: singular values below 1e-8 of the largest
  double smallest_singular_value = 0.0;
  double l1_norm_before = 0.0;
  int nodal_count = 0;
};

/// Result normalized to weighted L1 norm 1 with its largest-magnitude node positive.
DualSolution solve_dual(const DualProblem& dp);

/// Weighted L1 normalization with the sign convention above.
ScalarField normalize_dual(const ScalarField& f);

/// 1D: sign changes between neighbours; 2D: grid cells whose corners change sign.
int count_sign_changes(const ScalarField& f);

}  // namespace supremal
