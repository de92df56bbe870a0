#include "supremal/oracle_1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "supremal/error.hpp"

namespace supremal {

double PiecewiseQuadratic::value(double x) const {
  if (x <= xbar) return ua + sa * (x - a) + 0.5 * sigma1 * s * (x - a) * (x - a);
  const double ux = ua + sa * (xbar - a) + 0.5 * sigma1 * s * (xbar - a) * (xbar - a);
  const double dx = sa + sigma1 * s * (xbar - a);
  const double t = x - xbar;
  return ux + dx * t - 0.5 * sigma1 * s * t * t;
}

double PiecewiseQuadratic::derivative(double x) const {
  if (x <= xbar) return sa + sigma1 * s * (x - a);
  return sa + sigma1 * s * (xbar - a) - sigma1 * s * (x - xbar);
}

double PiecewiseQuadratic::second_derivative(double x) const {
  if (smooth) return sigma1 * s;
  return x < xbar ? sigma1 * s : -sigma1 * s;
}

namespace {

struct Coeffs {
  double alpha1, alpha2;
};

Coeffs pattern_coeffs(int sigma, double a, double b, double x) {
  const double l = x - a, r = b - x;
  return {sigma * (2.0 * x - a - b), sigma * (0.5 * l * l + l * r - 0.5 * r * r)};
}

}  // namespace

PiecewiseQuadratic solve_exact(double a, double b, double ua, double sa, double ub, double sb) {
  if (!(b > a)) throw InvalidArgument("oracle: need a < b");
  PiecewiseQuadratic pq{a, b, ua, sa, ub, sb};
  const double len = b - a;
  const double d1 = sb - sa;
  const double d2 = ub - ua - sa * len;

  // cubic Hermite interpolant: zero cubic coefficient means a quadratic fits
  const double c3 = (sa + sb) / (len * len) - 2.0 * (ub - ua) / (len * len * len);
  const double scale = 1.0 + std::abs(sa) / len + std::abs(sb) / len + std::abs(ub - ua) / (len * len);
  if (std::abs(c3) <= 1e-12 * scale) {
    const double c2 = d2 / (len * len);
    pq.smooth = true;
    pq.s = std::abs(2.0 * c2);
    pq.sigma1 = c2 < 0.0 ? -1 : 1;
    pq.xbar = b;
    return pq;
  }

  double best_s = std::numeric_limits<double>::infinity();
  const int samples = 10000;
  for (int sigma : {1, -1}) {
    auto phi = [&](double x) {
      const Coeffs c = pattern_coeffs(sigma, a, b, x);
      return c.alpha1 * d2 - c.alpha2 * d1;
    };
    auto consider = [&](double x) {
      const Coeffs c = pattern_coeffs(sigma, a, b, x);
      const double nrm = c.alpha1 * c.alpha1 + c.alpha2 * c.alpha2;
      if (nrm == 0.0) return;
      const double s = (c.alpha1 * d1 + c.alpha2 * d2) / nrm;
      if (s < 0.0) return;
      if (s < best_s) {
        best_s = s;
        pq.s = s;
        pq.xbar = x;
        pq.sigma1 = sigma;
      }
    };
    double x0 = a, f0 = phi(a);
    if (f0 == 0.0) consider(a);
    for (int i = 1; i <= samples; ++i) {
      const double x1 = a + len * i / samples;
      const double f1 = phi(x1);
      if (f1 == 0.0) {
        consider(x1);
      } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
        double lo = x0, hi = x1, flo = f0;
        while (hi - lo > 1e-12 * len) {
          const double mid = 0.5 * (lo + hi);
          const double fm = phi(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        consider(0.5 * (lo + hi));
      }
      x0 = x1;
      f0 = f1;
    }
  }
  if (!std::isfinite(best_s)) throw NumericalError("oracle: no admissible switch point found");
  return pq;
}

ScalarField sample_oracle(const PiecewiseQuadratic& pq, const GridPtr& grid) {
  if (grid->dim() != 1) throw InvalidArgument("oracle sampling needs a 1D grid");
  const double tol = 1e-12 * (pq.b - pq.a);
  if (std::abs(grid->coord(0, 0) - pq.a) > tol || std::abs(grid->coord(grid->num_nodes() - 1, 0) - pq.b) > tol) {
    throw InvalidArgument("oracle sampling: grid interval differs from the oracle interval");
  }
  return ScalarField::from_function(grid, [&](const Vec2& x) { return pq.value(x[0]); });
}

ClampedData oracle_data(const PiecewiseQuadratic& pq, const Grid& grid) {
  return ClampedData::hermite_1d(grid, pq.ua, pq.sa, pq.ub, pq.sb);
}

WitnessReport optimality_witness(const PiecewiseQuadratic& pq, const std::vector<ScalarField>& trials) {
  WitnessReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const ScalarField& w = trials[t];
    const Grid& g = w.grid();
    if (g.dim() != 1) throw InvalidArgument("witness: trial is not 1D");
    const int last = g.num_nodes() - 1;
    const double h = g.spacing(0);
    if (std::abs(w[0] - pq.ua) > 1e-10 || std::abs(w[last] - pq.ub) > 1e-10) {
      throw InvalidArgument("witness: trial " + std::to_string(t) + " violates the boundary values");
    }
    rep.tolerance = 1e-6 + 2.0 * h * pq.s;
    double m = 0.0;
    for (double v : apply_elliptic(w, EllipticMatrix::identity(1))) m = std::max(m, std::abs(v));
    const double margin = m - pq.s;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_trial = static_cast<int>(t);
    }
    if (margin < -rep.tolerance) rep.pass = false;
    ++rep.trials;
  }
  return rep;
}

std::vector<ScalarField> random_hermite_trials(const PiecewiseQuadratic& pq, const GridPtr& grid, int count,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> knot_count(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double len = pq.b - pq.a;
  const double mag = 1.0 + std::abs(pq.ua) + std::abs(pq.ub) + len * (std::abs(pq.sa) + std::abs(pq.sb)) + pq.s * len * len;
  std::vector<ScalarField> out;
  for (int c = 0; c < count; ++c) {
    const int k = knot_count(rng);
    std::vector<double> xs{pq.a}, vs{pq.ua}, ds{pq.sa};
    std::vector<double> inner;
    for (int i = 0; i < k; ++i) inner.push_back(pq.a + len * (0.05 + 0.9 * unit(rng)));
    std::sort(inner.begin(), inner.end());
    for (double x : inner) {
      xs.push_back(x);
      vs.push_back(pq.value(x) + 0.3 * mag * gauss(rng));
      ds.push_back(pq.derivative(x) + 0.3 * mag / len * gauss(rng));
    }
    xs.push_back(pq.b);
    vs.push_back(pq.ub);
    ds.push_back(pq.sb);
    out.push_back(ScalarField::from_function(grid, [&](const Vec2& p) {
      const double x = std::clamp(p[0], pq.a, pq.b);
      std::size_t i = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
      i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
      const double x0 = xs[i - 1], hseg = xs[i] - x0;
      if (hseg <= 0.0) return vs[i];
      const double t = (x - x0) / hseg;
      const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
      const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
      return h00 * vs[i - 1] + h10 * hseg * ds[i - 1] + h01 * vs[i] + h11 * hseg * ds[i];
    }));
  }
  return out;
}

}  // namespace supremal
