#include "supremal/scalar_function.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "supremal/error.hpp"

namespace supremal {

ScalarFunction::ScalarFunction(std::string name, Fn value, Fn d1, Fn d2)
    : name_(std::move(name)), value_(std::move(value)), d1_(std::move(d1)), d2_(std::move(d2)) {}

namespace {

double horner(const std::vector<double>& c, double t) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * t + *it;
  return s;
}

std::vector<double> differentiate(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

}  // namespace

ScalarFunction ScalarFunction::polynomial(std::vector<double> coeffs) {
  for (double v : coeffs) {
    if (!std::isfinite(v)) throw InvalidArgument("polynomial with non-finite coefficient");
  }
  auto d1 = differentiate(coeffs);
  auto d2 = differentiate(d1);
  return ScalarFunction(
      "polynomial", [c = coeffs](double t) { return horner(c, t); },
      [c = d1](double t) { return horner(c, t); }, [c = d2](double t) { return horner(c, t); });
}

ScalarFunction ScalarFunction::identity() {
  return ScalarFunction(
      "identity", [](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; });
}

ScalarFunction ScalarFunction::cube() {
  return ScalarFunction(
      "cube", [](double t) { return t * t * t; }, [](double t) { return 3.0 * t * t; },
      [](double t) { return 6.0 * t; });
}

ScalarFunction ScalarFunction::sinh() {
  return ScalarFunction(
      "sinh", [](double t) { return std::sinh(t); }, [](double t) { return std::cosh(t); },
      [](double t) { return std::sinh(t); });
}

double find_increasing_root(const std::function<double(double)>& g, const std::function<double(double)>& dg,
                            double guess, double tol) {
  double x = guess;
  double gx = g(x);
  if (!std::isfinite(gx)) throw NumericalError("root search: non-finite value at the initial guess");
  if (std::abs(gx) <= tol) return x;

  // bracket [lo, hi] with g(lo) < 0 < g(hi)
  double lo = x, hi = x, glo = gx, ghi = gx;
  double step = 1.0;
  for (int k = 0; k < 200; ++k) {
    if (gx > 0.0) {
      lo = x - step;
      glo = g(lo);
      if (!std::isfinite(glo)) break;
      if (glo <= 0.0) break;
    } else {
      hi = x + step;
      ghi = g(hi);
      if (!std::isfinite(ghi)) break;
      if (ghi >= 0.0) break;
    }
    step *= 2.0;
  }
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (!(glo < 0.0 && ghi > 0.0)) throw NumericalError("root search: no sign change found");

  x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    gx = g(x);
    if (std::abs(gx) <= tol) return x;
    if (gx < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) return x;
    const double d = dg(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - gx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

}  // namespace supremal
