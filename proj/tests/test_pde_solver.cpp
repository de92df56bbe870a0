#include <doctest.h>

#include <cmath>

#include "supremal/characterization.hpp"
#include "supremal/error.hpp"
#include "supremal/minimizer.hpp"
#include "supremal/oracle_1d.hpp"
#include "supremal/pde_solver.hpp"

using namespace supremal;

namespace {

GridPtr line(int n) {
  const double lo[] = {0.0}, hi[] = {1.0};
  const int nn[] = {n};
  return build_grid(1, lo, hi, nn);
}

GridPtr square(int n) {
  const double lo[] = {0.0, 0.0}, hi[] = {1.0, 1.0};
  const int nn[] = {n, n};
  return build_grid(2, lo, hi, nn);
}

DualProblem constant_coefficients(const GridPtr& g, double k, Vec2 l, DualMode mode) {
  const EllipticMatrix a = EllipticMatrix::identity(g->dim());
  return DualProblem{std::make_shared<const JetStencil>(g, a),
                     ScalarField::from_function(g, [k](const Vec2&) { return k; }),
                     std::vector<Vec2>(g->num_nodes(), l),
                     mode,
                     {},
                     {}};
}

Eigen::VectorXd sample(const GridPtr& g, double (*fn)(double)) {
  Eigen::VectorXd v(g->num_nodes());
  for (int n = 0; n < g->num_nodes(); ++n) v[n] = fn(g->coord(n, 0));
  return v;
}

// weighted L2 distance over nodes outside the band
double band_distance(const ScalarField& a, const ScalarField& b, const std::vector<char>& band) {
  const auto w = a.grid().weights();
  double s = 0.0;
  for (int n = 0; n < a.size(); ++n) {
    if (!band[n]) s += w[n] * (a[n] - b[n]) * (a[n] - b[n]);
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mode names") {
  for (DualMode m : {DualMode::kUnitBoundary, DualMode::kNullVector, DualMode::kAuto}) {
    CHECK(parse_dual_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_dual_mode("shooting"), InvalidArgument);
}

TEST_CASE("pure second-difference operator") {
  const GridPtr g = line(11);
  const double h = g->spacing(0);
  const Eigen::SparseMatrix<double> t = assemble(constant_coefficients(g, 0.0, {0.0, 0.0}, DualMode::kAuto));
  CHECK(t.rows() == 9);
  CHECK(t.cols() == 11);
  const Eigen::MatrixXd d(t);
  for (int r = 0; r < 9; ++r) {
    const int i = g->interior()[r];
    for (int c = 0; c < 11; ++c) {
      const double expect = c == i ? -2.0 / (h * h) : (std::abs(c - i) == 1 ? 1.0 / (h * h) : 0.0);
      CHECK(d(r, c) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  // affine fields are annihilated exactly
  const Eigen::VectorXd aff = sample(g, [](double x) { return 3.0 * x - 1.0; });
  CHECK((t * aff).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("constant drift: exponential kernel on interior rows") {
  const double ell = 1.5;
  double prev = 0.0;
  for (int n : {51, 101, 201}) {
    const GridPtr g = line(n);
    const Eigen::SparseMatrix<double> t = assemble(constant_coefficients(g, 0.0, {ell, 0.0}, DualMode::kAuto));
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = std::exp(ell * g->coord(i, 0));
    const Eigen::VectorXd r = t * e;
    // rows touching the boundary carry the clamped test closure
    const double inner = r.segment(2, r.size() - 4).cwiseAbs().maxCoeff();
    const double h = g->spacing(0);
    CHECK(inner <= 2.0 * ell * ell * ell * ell * std::exp(ell) * h * h);
    if (prev > 0.0) CHECK(inner < 0.3 * prev);
    prev = inner;
  }
}

TEST_CASE("unit-boundary mode") {
  // no transport: constant
  for (const GridPtr& g : {line(41), square(15)}) {
    const DualSolution s = solve_dual(constant_coefficients(g, 0.0, {0.0, 0.0}, DualMode::kUnitBoundary));
    CHECK(s.mode_used == DualMode::kUnitBoundary);
    CHECK_FALSE(s.fell_back);
    CHECK(s.nodal_count == 0);
    for (int n = 0; n < g->num_nodes(); ++n) CHECK(s.f[n] == doctest::Approx(1.0).epsilon(1e-9));
  }

  // constant drift: the two-point solution from {1, exp(l x)} with unit data is 1;
  // the clamped closure of the boundary rows makes the pointwise error first order
  double prev = 0.0;
  for (int n : {51, 101, 201, 401}) {
    const GridPtr g = line(n);
    const DualSolution s = solve_dual(constant_coefficients(g, 0.0, {1.5, 0.0}, DualMode::kUnitBoundary));
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(s.f[i] - 1.0));
    CHECK(err <= 1.0 * g->spacing(0));
    if (prev > 0.0) CHECK(err < 0.6 * prev);
    prev = err;
  }
}

TEST_CASE("unit-boundary mode is linear in the boundary data") {
  const GridPtr g = square(15);
  const DualProblem base = constant_coefficients(g, 0.0, {0.3, -0.2}, DualMode::kUnitBoundary);
  auto raw = [&](auto fn) {
    DualProblem dp = base;
    dp.boundary_values.assign(g->num_nodes(), 0.0);
    for (int n : g->boundary()) dp.boundary_values[n] = fn(g->position(n));
    const DualSolution s = solve_dual(dp);
    std::vector<double> v(s.f.values().begin(), s.f.values().end());
    for (double& x : v) x *= s.l1_norm_before;
    return v;
  };
  const auto b = raw([](const Vec2& x) { return 1.0 + x[0]; });
  const auto c = raw([](const Vec2& x) { return 1.0 + x[0] * x[1]; });
  const auto bc = raw([](const Vec2& x) { return 2.0 + x[0] + x[0] * x[1]; });
  const auto b2 = raw([](const Vec2& x) { return 2.0 * (1.0 + x[0]); });
  for (int n = 0; n < g->num_nodes(); ++n) {
    CHECK(bc[n] == doctest::Approx(b[n] + c[n]).epsilon(1e-9));
    CHECK(b2[n] == doctest::Approx(2.0 * b[n]).epsilon(1e-9));
  }
}

TEST_CASE("null-vector mode on the one-dimensional optimum") {
  const PiecewiseQuadratic pq = solve_exact(0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
  const GridPtr g = line(201);
  const Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), oracle_data(pq, *g));
  const ScalarField u = sample_oracle(pq, g);
  const DualProblem dp = make_dual_problem(pr, u, DualMode::kNullVector);
  CHECK_FALSE(dp.interfaces.empty());
  const DualSolution s = solve_dual(dp);
  CHECK(s.mode_used == DualMode::kNullVector);
  CHECK(s.null_dimension <= 1);
  CHECK(s.nodal_count == 1);
  const NodalSet ns = nodal_set(s.f);
  REQUIRE(ns.points.size() == 1);
  CHECK(std::abs(ns.points[0][0] - pq.xbar) <= 2.0 * g->spacing(0));

  // the exact dual is affine through the switch point
  const ScalarField affine = normalize_dual(
      ScalarField::from_function(g, [&](const Vec2& x) { return -pq.sigma1 * (x[0] - pq.xbar); }));
  const ScalarField f = orient_dual(pr, u, s.f);
  const ScalarField a = orient_dual(pr, u, affine);
  double err = 0.0;
  for (int n = 0; n < g->num_nodes(); ++n) err = std::max(err, std::abs(f[n] - a[n]));
  CHECK(err <= 10.0 * g->spacing(0));

  const double h = g->spacing(0);
  CHECK(weak_residual(pr, u, s.f, bump_family(*g)).max_residual <= 1e-6 + h * h);
}

TEST_CASE("null-vector dual agrees with the extracted dual of a continuation run") {
  const PiecewiseQuadratic pq = solve_exact(0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
  const GridPtr g = line(201);
  const Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), oracle_data(pq, *g));
  ContinuationSchedule sched;
  sched.early_stop = false;
  const ContinuationReport rep = continuation_solve(pr, sched);
  REQUIRE(rep.success);
  REQUIRE(rep.duals);
  const ScalarField fp = orient_dual(pr, *rep.u, normalize_dual(rep.duals->f));
  const DualSolution s = solve_dual(make_dual_problem(pr, *rep.u, DualMode::kNullVector));
  const ScalarField fn = orient_dual(pr, *rep.u, s.f);
  const auto band = nodal_band(nodal_set(fn), *g, 2.0 * g->spacing(0));
  CHECK(band_distance(fp, fn, band) <= 0.1);
  CHECK(weak_residual(pr, *rep.u, fn, bump_family(*g)).max_residual <= 1e-6 + g->spacing(0) * g->spacing(0));
}

TEST_CASE("normalization and sign counting") {
  const GridPtr g = line(101);
  const ScalarField f = normalize_dual(ScalarField::from_function(g, [](const Vec2& x) { return 0.3 - x[0]; }));
  double l1 = 0.0, big = 0.0, at = 0.0;
  const auto w = g->weights();
  for (int n = 0; n < f.size(); ++n) {
    l1 += w[n] * std::abs(f[n]);
    if (std::abs(f[n]) > big) {
      big = std::abs(f[n]);
      at = f[n];
    }
  }
  CHECK(l1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(at > 0.0);
  CHECK(count_sign_changes(f) == 1);  // passes through an exact zero node
  CHECK(count_sign_changes(ScalarField::from_function(g, [](const Vec2& x) { return x[0] - 0.305; })) == 1);
  CHECK_THROWS_AS(normalize_dual(ScalarField::zeros(g)), NumericalError);

  const GridPtr s = square(21);
  CHECK(count_sign_changes(ScalarField::from_function(s, [](const Vec2& x) { return x[0] - 0.52; })) == 20);
  CHECK(count_sign_changes(ScalarField::from_function(s, [](const Vec2&) { return 1.0; })) == 0);
}

TEST_CASE("non-finite coefficients are rejected") {
  const GridPtr g = line(21);
  DualProblem dp = constant_coefficients(g, 0.0, {0.0, 0.0}, DualMode::kAuto);
  dp.l[7][0] = std::nan("");
  CHECK_THROWS_AS(assemble(dp), InvalidArgument);
}
