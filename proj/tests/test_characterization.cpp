#include <doctest.h>

#include <cmath>
#include <random>

#include "supremal/characterization.hpp"
#include "supremal/error.hpp"
#include "supremal/oracle_1d.hpp"

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

ScalarField constant(const GridPtr& g, double c) {
  return ScalarField::from_function(g, [c](const Vec2&) { return c; });
}

struct OracleCase {
  PiecewiseQuadratic pq;
  GridPtr grid;
  Problem problem;
  ScalarField u;
  ScalarField f;  // affine, vanishing at the switch point, signed like u''
};

OracleCase oracle_case(int n) {
  const PiecewiseQuadratic pq = solve_exact(0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
  const GridPtr g = line(n);
  Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), oracle_data(pq, *g));
  const double xb = pq.xbar;
  const int s1 = pq.sigma1;
  ScalarField f = ScalarField::from_function(g, [xb, s1](const Vec2& x) { return -s1 * (x[0] - xb); });
  return {pq, g, std::move(pr), sample_oracle(pq, g), std::move(f)};
}

Problem xi_problem(const GridPtr& g, double ua, double sa, double ub, double sb) {
  return make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, ua, sa, ub, sb));
}

}  // namespace

TEST_CASE("sign law: constant curvature, oracle pair, cubic") {
  const GridPtr g = line(101);
  const Problem quad = xi_problem(g, 0.0, 0.0, 1.0, 2.0);
  const ScalarField x2 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; });
  const SignLawReport a = check_sign_law(quad, x2, constant(g, 1.0));
  CHECK(a.f_inf == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(a.residual <= 1e-10);
  CHECK(a.sign_violations == 0);

  const Problem cubic = xi_problem(g, 0.0, 0.0, 1.0, 3.0);
  const ScalarField x3 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] * x[0]; });
  const SignLawReport b = check_sign_law(cubic, x3, constant(g, 1.0));
  CHECK(std::abs(b.f_inf - 6.0) <= 2.0 * g->spacing(0) + 1e-10);  // ghost-node curvature at x = 1
  CHECK(b.residual == doctest::Approx(6.0).epsilon(0.02));
  CHECK(b.worst_node == 0);

  for (int n : {101, 201, 401}) {
    const OracleCase oc = oracle_case(n);
    const SignLawReport r = check_sign_law(oc.problem, oc.u, oc.f);
    CHECK(r.f_inf == doctest::Approx(oc.pq.s).epsilon(1e-8));
    CHECK(r.residual <= 10.0 * oc.pq.s / (n - 1));
    CHECK(r.sign_violations == 0);
    CHECK(r.band_nodes >= 1);
  }

  CHECK_THROWS_AS(check_sign_law(quad, x2, constant(g, 0.0)), InvalidArgument);
}

TEST_CASE("defect measures shrink under refinement") {
  double prev_sign = 1.0, prev_osc = 1.0;
  for (int n : {101, 201, 401, 801}) {
    const OracleCase oc = oracle_case(n);
    const SignLawReport s = check_sign_law(oc.problem, oc.u, oc.f);
    const AronssonReport a = aronsson_constancy(oc.problem, oc.u);
    CHECK(s.defect_measure < prev_sign);
    CHECK(a.defect_measure < prev_osc);
    CHECK(a.defect_measure <= 4.0 / (n - 1));
    prev_sign = s.defect_measure;
    prev_osc = a.defect_measure;
  }
}

TEST_CASE("aronsson constancy") {
  const GridPtr g = line(101);
  const Problem quad = xi_problem(g, 0.0, 0.0, 1.0, 2.0);
  const ScalarField x2 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; });
  const AronssonReport a = aronsson_constancy(quad, x2);
  CHECK(a.osc <= 1e-10);
  CHECK(a.gradient_max <= 1e-8);
  CHECK(a.defect_measure == 0.0);

  const Problem cubic = xi_problem(g, 0.0, 0.0, 1.0, 3.0);
  const ScalarField x3 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] * x[0]; });
  CHECK(aronsson_constancy(cubic, x3).osc == doctest::Approx(6.0).epsilon(0.02));

  const OracleCase oc = oracle_case(201);
  const NodalSet ns = nodal_set(oc.f);
  const std::vector<char> band = nodal_band(ns, *oc.grid, 2.0 * oc.grid->spacing(0));
  const AronssonReport o = aronsson_constancy(oc.problem, oc.u, &band);
  CHECK(o.osc_outside_band <= 1e-8);
  CHECK(o.osc <= 2.0 * oc.pq.s + 1e-12);
}

TEST_CASE("nodal set") {
  const GridPtr g = line(101);
  const NodalSet none = nodal_set(constant(g, 1.0));
  CHECK(none.points.empty());
  CHECK(none.measure_proxy == 0.0);

  const NodalSet one = nodal_set(ScalarField::from_function(g, [](const Vec2& x) { return x[0] - 0.503; }));
  REQUIRE(one.points.size() == 1);
  CHECK(std::abs(one.points[0][0] - 0.503) <= g->spacing(0));
  CHECK(one.crossing_cells == 1);
  CHECK(one.measure_proxy == doctest::Approx(g->spacing(0)));
  const auto band = nodal_band(one, *g, 2.0 * g->spacing(0));
  int in = 0;
  for (char c : band) in += c;
  CHECK(in >= 3);
  CHECK(in <= 5);

  const OracleCase oc = oracle_case(401);
  const NodalSet on = nodal_set(oc.f);
  REQUIRE(on.points.size() == 1);
  CHECK(std::abs(on.points[0][0] - oc.pq.xbar) <= 2.0 * oc.grid->spacing(0));

  const GridPtr s = square(21);
  const NodalSet line2 = nodal_set(ScalarField::from_function(s, [](const Vec2& x) { return x[0] - 0.52; }));
  CHECK(line2.segments.size() == 20);
  for (const auto& seg : line2.segments) {
    CHECK(seg[0][0] == doctest::Approx(0.52));
    CHECK(seg[1][0] == doctest::Approx(0.52));
  }
  const double h = s->spacing(0);
  CHECK(line2.measure_proxy == doctest::Approx(20 * h * h));
}

TEST_CASE("weak residual") {
  const GridPtr g = line(201);
  const Problem pr = xi_problem(g, 0.0, 0.0, 1.0, 2.0);
  const ScalarField x2 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; });
  const auto bumps = bump_family(*g);
  REQUIRE(!bumps.empty());
  const WeakResidualReport flat = weak_residual(pr, x2, constant(g, 1.0), bumps);
  CHECK(flat.family_size == static_cast<int>(bumps.size()));
  const double h = g->spacing(0);
  CHECK(flat.max_residual <= h * h);

  // affine f solves the F = xi dual equation in one dimension
  const OracleCase oc = oracle_case(201);
  CHECK(weak_residual(oc.problem, oc.u, oc.f, bumps).max_residual <= 1e-10);

  // noise is far from any solution
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> v(g->num_nodes());
    for (double& x : v) x = nd(rng);
    CHECK(weak_residual(pr, x2, ScalarField(g, v), bumps).max_residual >= 1e-2);
  }

  const GridPtr s = square(25);
  const Problem p2 = make_problem(s, EllipticMatrix::identity(2), pure_xi(2), ClampedData::zero(*s));
  const WeakResidualReport r2 = weak_residual(p2, ScalarField::zeros(s), constant(s, 1.0), bump_family(*s));
  CHECK(r2.family_size > 0);
  CHECK(r2.max_residual <= 1e-10);

  CHECK_THROWS_AS(weak_residual(pr, x2, constant(g, 1.0), {}), InvalidArgument);
}

TEST_CASE("bump derivatives are consistent") {
  const TestBump b{{0.4, 0.6}, 0.25};
  const Vec2 x{0.5, 0.55};
  const double e = 1e-5;
  const Vec2 gr = b.gradient(x, 2);
  CHECK(gr[0] == doctest::Approx((b.value({x[0] + e, x[1]}, 2) - b.value({x[0] - e, x[1]}, 2)) / (2 * e)).epsilon(1e-6));
  CHECK(gr[1] == doctest::Approx((b.value({x[0], x[1] + e}, 2) - b.value({x[0], x[1] - e}, 2)) / (2 * e)).epsilon(1e-6));
  const auto hs = b.hessian(x, 2);
  CHECK(hs[1] == doctest::Approx((b.gradient({x[0], x[1] + e}, 2)[0] - b.gradient({x[0], x[1] - e}, 2)[0]) / (2 * e))
                     .epsilon(1e-6));
  CHECK(b.value({0.4, 0.6 + 0.26}, 2) == 0.0);
}

TEST_CASE("theta functional") {
  const OracleCase oc = oracle_case(201);
  ProbeFamilyConfig cfg;
  cfg.count = 50;
  const auto family = probe_family(oc.problem, cfg);
  REQUIRE(family.size() == 50);
  for (const ScalarField& psi : family) {
    for (int n : oc.grid->boundary()) CHECK(psi[n] == 0.0);
    const Jet2Field jet = compute_variation_jet(*oc.problem.stencil, psi);
    double m = 0.0;
    for (double v : jet.elliptic) m = std::max(m, std::abs(v));
    CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  }
  const ThetaReport th = theta_probe(oc.problem, oc.u, oc.f, family);
  CHECK(th.min_value > 0.0);
  CHECK(th.values.size() == 50);

  // sign symmetry and positive homogeneity
  const Problem flat = xi_problem(oc.grid, 0.0, 0.0, 1.0, 2.0);
  const ScalarField x2 = ScalarField::from_function(oc.grid, [](const Vec2& x) { return x[0] * x[0]; });
  const ScalarField one = constant(oc.grid, 1.0);
  for (int k = 0; k < 5; ++k) {
    const ScalarField& psi = family[k];
    std::vector<double> neg(psi.values().begin(), psi.values().end()), big = neg;
    for (double& v : neg) v = -v;
    for (double& v : big) v *= 3.5;
    const double tp = theta_value(flat, x2, one, psi);
    CHECK(tp > 0.0);
    CHECK(theta_value(flat, x2, one, ScalarField(oc.grid, neg)) > 0.0);
    CHECK(theta_value(flat, x2, one, ScalarField(oc.grid, big)) == doctest::Approx(3.5 * tp).epsilon(1e-12));
  }

  std::vector<double> dirty(family[0].values().begin(), family[0].values().end());
  dirty[0] = 1e-3;
  CHECK_THROWS_AS(theta_value(flat, x2, one, ScalarField(oc.grid, dirty)), InvalidArgument);
}

TEST_CASE("minimality probes") {
  const OracleCase oc = oracle_case(201);
  ProbeFamilyConfig cfg;
  cfg.count = 100;
  const auto family = probe_family(oc.problem, cfg);
  const ProbeReport clean = minimality_probe(oc.problem, oc.u, family);
  CHECK(clean.probes == 100);
  CHECK(clean.t_grid.size() == 6);
  CHECK(clean.violations.empty());

  // a bump added on purpose is removed by the opposite direction
  const TestBump b{{0.6, 0.0}, 0.2};
  const ScalarField bump = normalize_probe(
      oc.problem, ScalarField::from_function(oc.grid, [&](const Vec2& x) { return b.value(x, 1); }));
  const double f_inf = oc.pq.s;
  std::vector<double> bumped(oc.u.values().begin(), oc.u.values().end());
  for (int n = 0; n < oc.u.size(); ++n) bumped[n] += 0.1 * f_inf * bump[n];
  const ScalarField ub(oc.grid, bumped);
  std::vector<ScalarField> with_bump = family;
  with_bump.push_back(bump);
  const ProbeReport dirty = minimality_probe(oc.problem, ub, with_bump);
  bool found = false;
  for (const ProbeViolation& v : dirty.violations) found = found || (v.probe == 100 && v.t < 0.0);
  CHECK(found);

  // F = 0 already: nothing goes below zero
  const Problem zero = xi_problem(oc.grid, 0.0, 0.0, 0.0, 0.0);
  CHECK(minimality_probe(zero, ScalarField::zeros(oc.grid), family).violations.empty());
}

TEST_CASE("orientation of the dual") {
  const OracleCase oc = oracle_case(101);
  std::vector<double> neg(oc.f.values().begin(), oc.f.values().end());
  for (double& v : neg) v = -v;
  bool flipped = false;
  const ScalarField o = orient_dual(oc.problem, oc.u, ScalarField(oc.grid, neg), &flipped);
  CHECK(flipped);
  for (int n = 0; n < o.size(); ++n) CHECK(o[n] == oc.f[n]);
  orient_dual(oc.problem, oc.u, oc.f, &flipped);
  CHECK_FALSE(flipped);
}

TEST_CASE("certification verdicts") {
  const OracleCase oc = oracle_case(201);
  CertificationOptions opt;
  const CertificationReport ok = certify(oc.problem, oc.u, oc.f, opt);
  CHECK(ok.verdict == Verdict::kPass);
  CHECK(ok.f_inf == doctest::Approx(oc.pq.s).epsilon(1e-8));
  CHECK(ok.nodal.points.size() == 1);

  const GridPtr g = line(101);
  const Problem cubic = xi_problem(g, 0.0, 0.0, 1.0, 3.0);
  const ScalarField x3 = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] * x[0]; });
  const CertificationReport bad = certify(cubic, x3, constant(g, 1.0), opt);
  CHECK(bad.verdict == Verdict::kFail);
  CHECK(!bad.reasons.empty());

  const Problem zero = xi_problem(g, 0.0, 0.0, 0.0, 0.0);
  CHECK(certify(zero, ScalarField::zeros(g), std::nullopt, opt).verdict == Verdict::kPass);
  CHECK(to_string(Verdict::kInconclusive) == "inconclusive");
}
