#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "supremal/error.hpp"
#include "supremal/field_io.hpp"
#include "supremal/grid.hpp"

using namespace supremal;

namespace {

GridPtr line(int n, double a = 0.0, double b = 1.0) {
  const double lo[] = {a}, hi[] = {b};
  const int nn[] = {n};
  return build_grid(1, lo, hi, nn);
}

GridPtr square(int nx, int ny) {
  const double lo[] = {0.0, 0.0}, hi[] = {1.0, 1.0};
  const int nn[] = {nx, ny};
  return build_grid(2, lo, hi, nn);
}

}  // namespace

TEST_CASE("five-node line: coordinates, spacing, trapezoid weights") {
  const GridPtr g = line(5);
  CHECK(g->num_nodes() == 5);
  CHECK(g->spacing(0) == doctest::Approx(0.25));
  const double xs[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const double ws[] = {0.125, 0.25, 0.25, 0.25, 0.125};
  for (int n = 0; n < 5; ++n) {
    CHECK(g->coord(n, 0) == doctest::Approx(xs[n]).epsilon(1e-15));
    CHECK(g->weights()[n] == doctest::Approx(ws[n]).epsilon(1e-15));
  }
  CHECK(g->boundary() == std::vector<int>{0, 4});
  CHECK(g->interior().size() == 3);
}

TEST_CASE("square grid: node counts and weights sum to one") {
  const GridPtr g = square(5, 5);
  CHECK(g->num_nodes() == 25);
  CHECK(g->interior().size() == 9);
  CHECK(g->boundary().size() == 16);
  const auto w = g->weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // corners are a null set for the sup: their jet is fixed by the data
  CHECK_FALSE(g->measured(g->index(0, 0)));
  CHECK_FALSE(g->measured(g->index(4, 4)));
  CHECK(g->measured(g->index(2, 0)));
  CHECK(g->support_node(g->index(4, 0)) == g->index(3, 1));
  for (int n = 0; n < g->num_nodes(); ++n) {
    const auto [i, j] = g->multi_index(n);
    const bool geometric = i == 0 || j == 0 || i == 4 || j == 4;
    CHECK(g->is_boundary(n) == geometric);
  }
  const GridPtr big = square(41, 17);
  const auto wb = big->weights();
  CHECK(std::accumulate(wb.begin(), wb.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(line(3), InvalidArgument);
  CHECK_THROWS_AS(line(10, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(line(10, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(square(5, 4), InvalidArgument);
}

TEST_CASE("elliptic matrix must be symmetric positive definite") {
  const double ok[] = {2.0, 0.5, 0.5, 1.0};
  CHECK(EllipticMatrix(2, ok).min_eigenvalue() > 0.0);
  const double asym[] = {2.0, 0.5, 0.4, 1.0};
  CHECK_THROWS_AS(EllipticMatrix(2, asym), InvalidArgument);
  const double indef[] = {1.0, 2.0, 2.0, 1.0};
  CHECK_THROWS_AS(EllipticMatrix(2, indef), InvalidArgument);
  const double neg[] = {-1.0};
  CHECK_THROWS_AS(EllipticMatrix(1, neg), InvalidArgument);
}

TEST_CASE("central gradient: exact on constants, affine and quadratic fields") {
  const GridPtr g = line(5);
  const auto c = apply_gradient(ScalarField::from_function(g, [](const Vec2&) { return 3.0; }));
  const auto a = apply_gradient(ScalarField::from_function(g, [](const Vec2& x) { return x[0]; }));
  const auto q = apply_gradient(ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; }));
  REQUIRE(q.size() == 3);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double x = g->coord(g->interior()[i], 0);
    CHECK(c[i][0] == doctest::Approx(0.0));
    CHECK(a[i][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q[i][0] == doctest::Approx(2.0 * x).epsilon(1e-14));
  }
}

TEST_CASE("elliptic stencil: quadratic and cubic exactness") {
  const GridPtr g = line(5);
  const EllipticMatrix one = EllipticMatrix::identity(1);
  const auto q = apply_elliptic(ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; }), one);
  const auto c = apply_elliptic(ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0] * x[0]; }), one);
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(q[i] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c[i] == doctest::Approx(6.0 * g->coord(g->interior()[i], 0)).epsilon(1e-12));
  }
  const GridPtr s = square(9, 7);
  const auto r = apply_elliptic(ScalarField::from_function(s, [](const Vec2& x) { return x[0] * x[0] + x[1] * x[1]; }),
                                EllipticMatrix::identity(2));
  for (double v : r) CHECK(v == doctest::Approx(4.0).epsilon(1e-11));
  // mixed term: A:D^2(xy) = 2 A12
  const double a[] = {2.0, 0.3, 0.3, 1.0};
  const auto m = apply_elliptic(ScalarField::from_function(s, [](const Vec2& x) { return x[0] * x[1] + x[0] * x[0]; }),
                                EllipticMatrix(2, a));
  for (double v : m) CHECK(v == doctest::Approx(0.6 + 4.0).epsilon(1e-11));
}

TEST_CASE("clamped ghosts: zero data mirrors, quadratic data is reproduced to the boundary") {
  const GridPtr g = line(11);
  std::vector<double> vals(11);
  for (int n = 0; n < 11; ++n) vals[n] = std::sin(3.0 * n);
  const ScalarField u(g, vals);
  const ExtendedField z = clamp_boundary(u, ClampedData::zero(*g));
  CHECK(z.at(-1) == doctest::Approx(vals[1]));
  CHECK(z.at(11) == doctest::Approx(vals[9]));

  const ClampedData quad = ClampedData::hermite_1d(*g, 0.0, 0.0, 1.0, 2.0);
  const ScalarField q = ScalarField::from_function(g, [](const Vec2& x) { return x[0] * x[0]; });
  const JetStencil st(g, EllipticMatrix::identity(1));
  const Jet2Field jet = compute_jet(st, q, quad);
  for (int n = 0; n < 11; ++n) {
    CHECK(jet.elliptic[n] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(jet.gradient[n][0] == doctest::Approx(2.0 * g->coord(n, 0)).epsilon(1e-10));
  }
}

TEST_CASE("clamped data validation") {
  const GridPtr g = line(7);
  ClampedData d = ClampedData::zero(*g);
  d.value.pop_back();
  CHECK_THROWS_AS(d.validate(*g), InvalidArgument);
  const std::vector<double> short_values{0.0};
  const std::vector<Vec2> slopes{{0.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(ClampedData::from_boundary_lists(*g, short_values, slopes), InvalidArgument);
}

TEST_CASE("2D clamped stencil reproduces quadratics at every node") {
  const GridPtr g = square(9, 11);
  const double a[] = {1.5, -0.4, -0.4, 0.8};
  const EllipticMatrix am(2, a);
  auto q = [](const Vec2& x) { return 0.5 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1] * x[1] + x[0]; };
  auto dq = [](const Vec2& x) { return Vec2{x[0] - x[1] + 1.0, -x[0] + 4.0 * x[1]}; };
  const ClampedData data = ClampedData::from_function(*g, q, dq);
  const JetStencil st(g, am);
  const Jet2Field jet = compute_jet(st, ScalarField::from_function(g, q), data);
  const double exact = 1.5 * 1.0 + 2.0 * (-0.4) * (-1.0) + 0.8 * 4.0;
  for (int n = 0; n < g->num_nodes(); ++n) {
    CHECK(jet.elliptic[n] == doctest::Approx(exact).epsilon(1e-10));
    const Vec2 d = dq(g->position(n));
    CHECK(jet.gradient[n][0] == doctest::Approx(d[0]).epsilon(1e-10));
    CHECK(jet.gradient[n][1] == doctest::Approx(d[1]).epsilon(1e-10));
  }
}

TEST_CASE("operators are linear") {
  const GridPtr g = square(8, 8);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> a(g->num_nodes()), b(g->num_nodes()), c(g->num_nodes());
  for (int n = 0; n < g->num_nodes(); ++n) {
    a[n] = nd(rng);
    b[n] = nd(rng);
    c[n] = 2.0 * a[n] - 3.0 * b[n];
  }
  const EllipticMatrix id = EllipticMatrix::identity(2);
  const auto ea = apply_elliptic(ScalarField(g, a), id), eb = apply_elliptic(ScalarField(g, b), id);
  const auto ec = apply_elliptic(ScalarField(g, c), id);
  for (std::size_t i = 0; i < ec.size(); ++i) CHECK(ec[i] == doctest::Approx(2.0 * ea[i] - 3.0 * eb[i]).epsilon(1e-9));
}

TEST_CASE("weighted adjoint of the zero-slope elliptic operator") {
  for (const GridPtr& g : {line(31), square(13, 9)}) {
    const double a[] = {1.2, 0.3, 0.3, 0.9};
    const JetStencil st(g, g->dim() == 1 ? EllipticMatrix::identity(1) : EllipticMatrix(2, a));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u(g->num_nodes()), v(g->num_nodes());
    for (int n = 0; n < g->num_nodes(); ++n) {
      u[n] = g->is_boundary(n) ? 0.0 : nd(rng);
      v[n] = nd(rng);
    }
    const Eigen::VectorXd eu = st.elliptic_matrix() * u;
    const Eigen::VectorXd adj = st.elliptic_adjoint(v);
    const auto w = g->weights();
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (int n = 0; n < g->num_nodes(); ++n) {
      lhs += w[n] * eu[n] * v[n];
      rhs += w[n] * u[n] * adj[n];
      scale += w[n] * std::abs(eu[n] * v[n]);
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
  }
}

TEST_CASE("field CSV round trip and rejection of mismatched grids") {
  const GridPtr g = square(6, 5);
  const ScalarField u = ScalarField::from_function(g, [](const Vec2& x) { return std::exp(x[0]) / 3.0 - x[1]; });
  std::stringstream ss;
  write_field_csv(ss, u);
  const std::string text = ss.str();
  CHECK(text.rfind("x,y,value\n", 0) == 0);
  std::stringstream in(text);
  const ScalarField back = read_field_csv(in, g);
  for (int n = 0; n < g->num_nodes(); ++n) CHECK(back[n] == u[n]);
  std::stringstream wrong(text);
  CHECK_THROWS_AS(read_field_csv(wrong, square(6, 6)), InvalidArgument);
  std::stringstream header("x,value\n0,1\n");
  CHECK_THROWS_AS(read_field_csv(header, g), InvalidArgument);
}
