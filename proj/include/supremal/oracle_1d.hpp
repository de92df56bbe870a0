#pragma once

// Exact minimizer of max |u''| on an interval under clamped data:
// a C^1 piecewise quadratic whose curvature flips sign once.

#include <cstdint>
#include <string>
#include <vector>

#include "supremal/grid.hpp"

namespace supremal {

struct PiecewiseQuadratic {
  double a = 0.0, b = 1.0;
  double ua = 0.0, sa = 0.0;  // u(a), u'(a)
  double ub = 0.0, sb = 0.0;  // u(b), u'(b)
  double xbar = 0.0;          // curvature switch point
  double s = 0.0;             // |u''|
  int sigma1 = 1;             // sign of u'' on (a, xbar)
  bool smooth = false;        // data interpolated by a single quadratic

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  std::string sign_pattern() const { return sigma1 > 0 ? "+-" : "-+"; }
};

/// Scans both sign patterns for the switch point (10^4 samples, bisection to
/// 1e-12) and keeps the smallest admissible curvature; the quadratic case is
/// detected from the cubic Hermite interpolant.
PiecewiseQuadratic solve_exact(double a, double b, double ua, double sa, double ub, double sb);

/// Samples the oracle on a 1D grid whose interval is [pq.a, pq.b].
ScalarField sample_oracle(const PiecewiseQuadratic& pq, const GridPtr& grid);

/// Clamped data of the oracle problem on `grid`.
ClampedData oracle_data(const PiecewiseQuadratic& pq, const Grid& grid);

struct WitnessReport {
  bool pass = true;
  int trials = 0;
  double tolerance = 0.0;
  double min_margin = 0.0;  // min over trials of (max |w''| - s)
  int worst_trial = -1;
};

/// Every trial must have discrete max |w''| >= s - tol with
/// tol = 1e-6 + 2 h s. Throws InvalidArgument for trials violating the data.
WitnessReport optimality_witness(const PiecewiseQuadratic& pq, const std::vector<ScalarField>& trials);

/// Random C^1 piecewise cubic Hermite fields matching the oracle data.
std::vector<ScalarField> random_hermite_trials(const PiecewiseQuadratic& pq, const GridPtr& grid, int count,
                                               std::uint64_t seed);

}  // namespace supremal
