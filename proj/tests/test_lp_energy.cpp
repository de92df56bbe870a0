#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "supremal/error.hpp"
#include "supremal/lp_energy.hpp"

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

Problem cubic_problem(int n) {
  const GridPtr g = line(n);
  return make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, 0.0, 0.0, 1.0, 3.0));
}

ScalarField cube(const GridPtr& g) {
  return ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] * x[0]; });
}

ScalarField random_feasible(const Problem& pr, std::mt19937_64& rng, double amp) {
  std::normal_distribution<double> nd;
  std::vector<double> v(pr.grid().num_nodes());
  for (int n = 0; n < pr.grid().num_nodes(); ++n) {
    const Vec2 x = pr.grid().position(n);
    v[n] = x[0] * x[0] * x[0] + amp * nd(rng) * x[0] * (1.0 - x[0]);
  }
  return feasible_field(pr, ScalarField(pr.grid_ptr(), v));
}

// max relative deviation of the analytic gradient from central differences
double gradient_error(const Problem& pr, const ScalarField& u, const LpEnergyConfig& cfg) {
  const Eigen::VectorXd g = energy_gradient(pr, u, cfg);
  std::vector<double> v(u.values().begin(), u.values().end());
  double worst = 0.0, scale = g.cwiseAbs().maxCoeff();
  for (int n : pr.grid().interior()) {
    const double h = 1e-6 * (1.0 + std::abs(v[n]));
    const double keep = v[n];
    v[n] = keep + h;
    const double ep = energy(pr, ScalarField(u.grid_ptr(), v), cfg);
    v[n] = keep - h;
    const double em = energy(pr, ScalarField(u.grid_ptr(), v), cfg);
    v[n] = keep;
    const double fd = (ep - em) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[n]));
  }
  return worst / scale;
}

}  // namespace

TEST_CASE("energy of a constant-curvature field is the curvature") {
  const GridPtr g = line(41);
  const Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, 0.0, -1.0, 0.0, 1.0));
  const ScalarField u = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] - x[0]; });
  for (double p : {2.0, 4.0, 64.0}) {
    LpEnergyConfig cfg;
    cfg.p = p;
    CHECK(energy(pr, u, cfg) == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("zero supremand at the anchor gives zero energy") {
  const GridPtr g = line(21);
  const Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::zero(*g));
  LpEnergyConfig cfg;
  cfg.p = 6.0;
  cfg.epsilon = 1.0;
  cfg.anchor = ScalarField::zeros(g);
  CHECK(energy(pr, ScalarField::zeros(g), cfg) == 0.0);
  CHECK(energy_gradient(pr, ScalarField::zeros(g), cfg).cwiseAbs().maxCoeff() == 0.0);
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(energy_gradient(pr, ScalarField::zeros(g), cfg), NumericalError);
}

TEST_CASE("x^3 energy converges to the analytic 4-norm at second order") {
  const double exact = 6.0 / std::pow(5.0, 0.25);
  double prev = 0.0;
  for (int n : {51, 101, 201}) {
    const Problem pr = cubic_problem(n);
    LpEnergyConfig cfg;
    cfg.p = 4.0;
    const double err = std::abs(energy(pr, cube(pr.grid_ptr()), cfg) - exact);
    const double h = 1.0 / (n - 1);
    CHECK(err <= 2.0 * h * h * exact);
    if (prev > 0.0) CHECK(err < 0.3 * prev);
    prev = err;
  }
}

TEST_CASE("analytic gradient against central differences") {
  std::mt19937_64 rng(21);
  const Problem pr = cubic_problem(41);
  for (double p : {2.0, 4.0, 8.0}) {
    for (int t = 0; t < 4; ++t) {
      LpEnergyConfig cfg;
      cfg.p = p;
      CHECK(gradient_error(pr, random_feasible(pr, rng, 0.3), cfg) <= 1e-6);
    }
  }
  // penalized, 2D, additive with state and gradient-free coupling
  const GridPtr g = square(9);
  const double a[] = {1.5, 0.2, 0.2, 1.0};
  const StateTerm st = [](const Vec2& x, double eta) {
    return std::array<double, 3>{std::sin(x[0]) + 0.3 * eta * eta, 0.6 * eta, 0.6};
  };
  const Problem p2 = make_problem(g, EllipticMatrix(2, a),
                                  make_additive(2, st, ScalarFunction::polynomial({0.0, 1.0, 0.0, 0.1})),
                                  ClampedData::from_function(*g, [](const Vec2& x) { return x[0] * x[1]; },
                                                             [](const Vec2& x) { return Vec2{x[1], x[0]}; }));
  std::normal_distribution<double> nd;
  std::vector<double> v(g->num_nodes());
  for (int n = 0; n < g->num_nodes(); ++n) v[n] = nd(rng);
  LpEnergyConfig cfg;
  cfg.p = 6.0;
  cfg.epsilon = 0.7;
  cfg.anchor = ScalarField::zeros(g);
  CHECK(gradient_error(p2, feasible_field(p2, ScalarField(g, v)), cfg) <= 1e-6);
}

TEST_CASE("even data and even F give an even gradient") {
  const GridPtr g = line(31);
  const Problem pr = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, 0.0, 1.0, 0.0, -1.0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> v(31);
  for (int n = 0; n <= 15; ++n) v[n] = v[30 - n] = nd(rng);
  LpEnergyConfig cfg;
  cfg.p = 5.0;
  const Eigen::VectorXd gr = energy_gradient(pr, feasible_field(pr, ScalarField(g, v)), cfg);
  for (int n = 0; n <= 15; ++n) CHECK(gr[n] == doctest::Approx(gr[30 - n]).epsilon(1e-10));
}

TEST_CASE("p-norm monotonicity and the sup bound") {
  std::mt19937_64 rng(8);
  const Problem pr = cubic_problem(61);
  for (int t = 0; t < 10; ++t) {
    const ScalarField u = random_feasible(pr, rng, 1.0);
    const double sup = discrete_sup(pr, u);
    double prev = 0.0;
    for (double p : {2.0, 3.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0}) {
      LpEnergyConfig cfg;
      cfg.p = p;
      const double e = energy(pr, u, cfg);
      CHECK(e >= prev - 1e-12);
      CHECK(e <= sup + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("penalty identity") {
  std::mt19937_64 rng(4);
  const Problem pr = cubic_problem(41);
  const ScalarField u = random_feasible(pr, rng, 0.5);
  const ScalarField anchor = random_feasible(pr, rng, 0.5);
  LpEnergyConfig a, b;
  a.p = b.p = 4.0;
  b.epsilon = 2.5;
  b.anchor = anchor;
  double ms = 0.0;
  const auto w = pr.grid().weights();
  for (int n = 0; n < u.size(); ++n) ms += w[n] * (u[n] - anchor[n]) * (u[n] - anchor[n]);
  CHECK(energy(pr, u, b) - energy(pr, u, a) == doctest::Approx(1.25 * ms).epsilon(1e-12));
}

TEST_CASE("dual extraction") {
  const GridPtr g = line(41);
  const Problem up = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, 0.0, -1.0, 0.0, 1.0));
  const Problem down = make_problem(g, EllipticMatrix::identity(1), pure_xi(1), ClampedData::hermite_1d(*g, 0.0, 1.0, 0.0, -1.0));
  const ScalarField q = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] - x[0]; });
  const ScalarField mq = ScalarField::from_function(g, [](const Vec2& x) { return x[0] - x[0] * x[0]; });
  for (double p : {2.0, 7.0, 200.0}) {
    const DualFields d = extract_duals(up, q, p);
    const DualFields e = extract_duals(down, mq, p);
    CHECK(d.e_p == doctest::Approx(2.0).epsilon(1e-12));
    for (int n = 0; n < g->num_nodes(); ++n) {
      CHECK(d.f[n] == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(e.f[n] == doctest::Approx(-1.0).epsilon(1e-10));
      CHECK(d.k[n] == 0.0);
    }
  }

  // x^3 at p = 8: log-domain against direct evaluation
  const Problem pr = cubic_problem(41);
  const ScalarField u = cube(pr.grid_ptr());
  const DualFields d = extract_duals(pr, u, 8.0);
  const auto fv = supremand_values(pr, u);
  LpEnergyConfig cfg;
  cfg.p = 8.0;
  CHECK(d.e_p == doctest::Approx(lp_norm(pr.grid(), fv, 8.0)).epsilon(1e-12));
  for (int n = 0; n < u.size(); ++n) {
    const double direct = std::pow(std::abs(fv[n]) / d.e_p, 7.0) * (fv[n] < 0 ? -1.0 : 1.0);
    CHECK(d.f[n] == doctest::Approx(direct).epsilon(1e-10));
    CHECK((d.f[n] > 0) == (fv[n] > 0));
  }
}

TEST_CASE("log-domain duals stay finite at extreme p") {
  const Problem pr = cubic_problem(41);
  const ScalarField u = cube(pr.grid_ptr());
  const auto w = pr.grid().weights();
  const double w_min = *std::min_element(w.begin(), w.end());
  for (double p : {1e3, 1e6}) {
    const DualFields d = extract_duals(pr, u, p);
    for (int n = 0; n < u.size(); ++n) {
      CHECK(std::isfinite(d.f[n]));
      CHECK(std::abs(d.f[n]) <= 1.0 / w_min);
    }
  }
}

TEST_CASE("2D sign law of the extracted dual") {
  const GridPtr g = square(11);
  const Problem pr = make_problem(g, EllipticMatrix::identity(2), pure_xi(2), ClampedData::zero(*g));
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  std::vector<double> v(g->num_nodes());
  for (double& x : v) x = nd(rng);
  const ScalarField u = feasible_field(pr, ScalarField(g, v));
  const DualFields d = extract_duals(pr, u, 6.0);
  const auto fv = supremand_values(pr, u);
  for (int n = 0; n < g->num_nodes(); ++n) {
    if (!g->measured(n)) continue;
    CHECK((d.f[n] > 0) == (fv[n] > 0));
    CHECK((d.f[n] < 0) == (fv[n] < 0));
  }
}
