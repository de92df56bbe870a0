#include "supremal/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "supremal/error.hpp"

namespace supremal {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Vec2 lerp_zero(const Vec2& a, const Vec2& b, double fa, double fb) {
  const double t = fa / (fa - fb);
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

}  // namespace

NodalSet nodal_set(const ScalarField& f) {
  const Grid& g = f.grid();
  NodalSet out;
  if (g.dim() == 1) {
    for (int n = 0; n + 1 < g.num_nodes(); ++n) {
      if ((f[n] > 0.0) != (f[n + 1] > 0.0)) {
        out.points.push_back(lerp_zero(g.position(n), g.position(n + 1), f[n], f[n + 1]));
        ++out.crossing_cells;
      }
    }
    out.measure_proxy = out.crossing_cells * g.cell_volume();
    return out;
  }
  for (int i = 0; i + 1 < g.nodes_along(0); ++i) {
    for (int j = 0; j + 1 < g.nodes_along(1); ++j) {
      const int c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
      double v[4];
      Vec2 p[4];
      for (int k = 0; k < 4; ++k) {
        v[k] = f[c[k]];
        p[k] = g.position(c[k]);
      }
      std::array<std::optional<Vec2>, 4> edge;
      int crossings = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if ((v[a] > 0.0) != (v[b] > 0.0)) {
          edge[e] = lerp_zero(p[a], p[b], v[a], v[b]);
          ++crossings;
        }
      }
      if (crossings == 0) continue;
      ++out.crossing_cells;
      std::vector<std::array<int, 2>> pairs;
      if (crossings == 2) {
        std::array<int, 2> pr{-1, -1};
        for (int e = 0; e < 4; ++e) {
          if (edge[e]) (pr[0] < 0 ? pr[0] : pr[1]) = e;
        }
        pairs.push_back(pr);
      } else {
        // saddle: the center average decides which diagonal is connected
        const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((center > 0.0) == (v[0] > 0.0)) {
          pairs = {{0, 1}, {2, 3}};
        } else {
          pairs = {{3, 0}, {1, 2}};
        }
      }
      for (const auto& pr : pairs) {
        const Vec2 a = *edge[pr[0]], b = *edge[pr[1]];
        out.segments.push_back({a, b});
        out.points.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
      }
    }
  }
  out.measure_proxy = out.crossing_cells * g.cell_volume();
  return out;
}

std::vector<char> nodal_band(const NodalSet& set, const Grid& grid, double width) {
  std::vector<char> band(grid.num_nodes(), 0);
  for (int n = 0; n < grid.num_nodes(); ++n) {
    const Vec2 x = grid.position(n);
    if (grid.dim() == 1) {
      for (const Vec2& p : set.points) {
        if (std::abs(x[0] - p[0]) <= width) {
          band[n] = 1;
          break;
        }
      }
    } else {
      for (const auto& s : set.segments) {
        if (segment_distance(x, s[0], s[1]) <= width) {
          band[n] = 1;
          break;
        }
      }
    }
  }
  return band;
}

SignLawReport check_sign_law(const Problem& problem, const ScalarField& u, const ScalarField& f, double band_cells) {
  const Grid& g = problem.grid();
  if (!f.grid().same_layout(g)) throw InvalidArgument("sign law: u and f live on different grids");
  if (std::all_of(f.values().begin(), f.values().end(), [](double v) { return v == 0.0; })) {
    throw InvalidArgument("sign law: dual field vanishes identically");
  }
  const std::vector<double> fv = supremand_values(problem, u);
  SignLawReport rep;
  rep.f_inf = measured_max(g, fv);
  const auto band = nodal_band(nodal_set(f), g, band_cells * g.max_spacing());
  const auto w = g.weights();
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (!g.measured(n)) continue;
    const double dev = std::abs(fv[n] - rep.f_inf * sgn(f[n]));
    if (dev > 1e-6 * rep.f_inf) rep.defect_measure += w[n];
    if (band[n]) {
      ++rep.band_nodes;
      continue;
    }
    if (dev > rep.residual) {
      rep.residual = dev;
      rep.worst_node = n;
    }
    if (rep.f_inf > 0.0 && sgn(fv[n]) != sgn(f[n])) ++rep.sign_violations;
  }
  rep.relative_residual = rep.f_inf > 0.0 ? rep.residual / rep.f_inf : 0.0;
  return rep;
}

AronssonReport aronsson_constancy(const Problem& problem, const ScalarField& u, const std::vector<char>* band) {
  const Grid& g = problem.grid();
  std::vector<double> mag = supremand_values(problem, u);
  for (int n = 0; n < g.num_nodes(); ++n) mag[n] = std::abs(mag[g.support_node(n)]);
  AronssonReport rep;
  const double hi = *std::max_element(mag.begin(), mag.end());
  const double lo = *std::min_element(mag.begin(), mag.end());
  rep.osc = hi - lo;
  double hi_out = -std::numeric_limits<double>::infinity(), lo_out = std::numeric_limits<double>::infinity();
  const auto w = g.weights();
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (mag[n] < hi * (1.0 - 1e-6)) rep.defect_measure += w[n];
    if (band && (*band)[n]) continue;
    hi_out = std::max(hi_out, mag[n]);
    lo_out = std::min(lo_out, mag[n]);
  }
  rep.osc_outside_band = hi_out >= lo_out ? hi_out - lo_out : 0.0;
  for (const Vec2& d : apply_gradient(ScalarField(u.grid_ptr(), mag))) {
    rep.gradient_max = std::max(rep.gradient_max, std::hypot(d[0], d[1]));
  }
  return rep;
}

double TestBump::value(const Vec2& x, int dim) const {
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
  const double s = r2 / (radius * radius);
  return s >= 1.0 ? 0.0 : std::pow(1.0 - s, 3);
}

Vec2 TestBump::gradient(const Vec2& x, int dim) const {
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
  const double s = r2 / (radius * radius);
  Vec2 out{0.0, 0.0};
  if (s >= 1.0) return out;
  for (int k = 0; k < dim; ++k) out[k] = -3.0 * (1.0 - s) * (1.0 - s) * 2.0 * (x[k] - center[k]) / (radius * radius);
  return out;
}

std::array<double, 3> TestBump::hessian(const Vec2& x, int dim) const {
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
  const double rr = radius * radius;
  const double s = r2 / rr;
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  // D2 psi = 6 (1 - s) ds ds^T - 3 (1 - s)^2 D2 s, ds = 2 (x - c) / R^2, D2 s = 2 I / R^2
  const Vec2 ds{2.0 * (x[0] - center[0]) / rr, dim == 2 ? 2.0 * (x[1] - center[1]) / rr : 0.0};
  const double a = 6.0 * (1.0 - s), b = 3.0 * (1.0 - s) * (1.0 - s) * 2.0 / rr;
  return {a * ds[0] * ds[0] - b, a * ds[0] * ds[1], dim == 2 ? a * ds[1] * ds[1] - b : 0.0};
}

std::vector<TestBump> bump_family(const Grid& grid) {
  std::vector<TestBump> out;
  const double h = grid.max_spacing();
  for (double factor : {4.0, 6.0, 8.0}) {
    const double r = factor * h;
    std::vector<double> cx, cy{0.0};
    for (double x = grid.lower(0) + r; x <= grid.upper(0) - r + 1e-12; x += r) cx.push_back(x);
    if (grid.dim() == 2) {
      cy.clear();
      for (double y = grid.lower(1) + r; y <= grid.upper(1) - r + 1e-12; y += r) cy.push_back(y);
    }
    for (double x : cx) {
      for (double y : cy) out.push_back({{x, y}, r});
    }
  }
  return out;
}

WeakResidualReport weak_residual(const Problem& problem, const ScalarField& u, const ScalarField& f,
                                 const std::vector<TestBump>& bumps) {
  if (bumps.empty()) throw InvalidArgument("weak residual: empty test family");
  const Grid& g = problem.grid();
  const int dim = g.dim();
  ScalarField k = ScalarField::zeros(problem.grid_ptr());
  std::vector<Vec2> l;
  transport_coefficients(problem, u, &k, &l);
  const auto w = g.weights();
  double l1 = 0.0;
  for (int n = 0; n < g.num_nodes(); ++n) l1 += w[n] * std::abs(f[n]);
  if (!(l1 > 0.0)) throw InvalidArgument("weak residual: dual field vanishes identically");

  WeakResidualReport rep;
  rep.family_size = static_cast<int>(bumps.size());
  for (std::size_t b = 0; b < bumps.size(); ++b) {
    const TestBump& bump = bumps[b];
    // derivatives from the solver's own stencil (discrete weak form); the
    // analytic ones only set the C^2 scale
    const ScalarField psi = ScalarField::from_function(problem.grid_ptr(), [&](const Vec2& x) { return bump.value(x, dim); });
    const Jet2Field jet = compute_variation_jet(*problem.stencil, psi);
    double sum = 0.0, vmax = 0.0, gmax = 0.0, hmax = 0.0;
    for (int n = 0; n < g.num_nodes(); ++n) {
      const Vec2 x = g.position(n);
      const Vec2 d = bump.gradient(x, dim);
      const auto hs = bump.hessian(x, dim);
      vmax = std::max(vmax, std::abs(psi[n]));
      gmax = std::max(gmax, std::hypot(d[0], d[1]));
      hmax = std::max({hmax, std::abs(hs[0]), std::abs(hs[1]), std::abs(hs[2])});
      double drift = 0.0;
      for (int a = 0; a < dim; ++a) drift += l[n][a] * jet.gradient[n][a];
      sum += w[n] * f[n] * (jet.elliptic[n] + drift + k[n] * jet.value[n]);
    }
    const double c2 = vmax + gmax + hmax;
    if (c2 == 0.0) continue;
    const double r = std::abs(sum) / (l1 * c2);
    if (r > rep.max_residual || rep.worst_bump < 0) {
      rep.max_residual = std::max(rep.max_residual, r);
      rep.worst_bump = static_cast<int>(b);
    }
  }
  return rep;
}

ScalarField normalize_probe(const Problem& problem, const ScalarField& psi) {
  const Jet2Field jet = compute_variation_jet(*problem.stencil, psi);
  double m = 0.0;
  for (double x : jet.elliptic) m = std::max(m, std::abs(x));
  if (!(m > 0.0)) throw InvalidArgument("probe direction has vanishing A:D^2");
  std::vector<double> v(psi.values().begin(), psi.values().end());
  for (double& x : v) x /= m;
  return ScalarField(psi.grid_ptr(), std::move(v));
}

namespace {

void smooth_once(const Grid& g, std::vector<double>& v) {
  std::vector<double> tmp(v.size());
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int n_axis = g.nodes_along(axis);
    for (int n = 0; n < g.num_nodes(); ++n) {
      auto mi = g.multi_index(n);
      const int i = mi[axis];
      auto at = [&](int k) {
        auto m = mi;
        m[axis] = std::clamp(k, 0, n_axis - 1);
        return v[g.index(m[0], m[1])];
      };
      tmp[n] = 0.25 * (at(i - 1) + 2.0 * at(i) + at(i + 1));
    }
    v.swap(tmp);
  }
}

double max_third_difference(const Grid& g, const std::vector<double>& v) {
  double m = 0.0;
  for (int axis = 0; axis < g.dim(); ++axis) {
    const double h3 = std::pow(g.spacing(axis), 3);
    for (int n = 0; n < g.num_nodes(); ++n) {
      auto mi = g.multi_index(n);
      if (mi[axis] < 1 || mi[axis] + 2 >= g.nodes_along(axis)) continue;
      auto at = [&](int k) {
        auto q = mi;
        q[axis] += k;
        return v[g.index(q[0], q[1])];
      };
      m = std::max(m, std::abs(at(2) - 3.0 * at(1) + 3.0 * at(0) - at(-1)) / h3);
    }
  }
  return m;
}

}  // namespace

std::vector<ScalarField> probe_family(const Problem& problem, const ProbeFamilyConfig& cfg) {
  const Grid& g = problem.grid();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> cutoff(g.num_nodes(), 1.0);
  for (int n = 0; n < g.num_nodes(); ++n) {
    const Vec2 x = g.position(n);
    for (int k = 0; k < g.dim(); ++k) {
      const double len = g.upper(k) - g.lower(k);
      const double a = (x[k] - g.lower(k)) / len, b = (g.upper(k) - x[k]) / len;
      cutoff[n] *= 16.0 * a * a * b * b;
    }
  }
  std::vector<ScalarField> out;
  for (int c = 0; c < cfg.count; ++c) {
    std::vector<double> v(g.num_nodes());
    for (double& x : v) x = gauss(rng);
    int passes = 0;
    for (; passes < cfg.smoothing_passes; ++passes) smooth_once(g, v);
    ScalarField psi(problem.grid_ptr(), v);
    for (int guard = 0; guard < 12; ++guard) {
      std::vector<double> cut(v.size());
      for (std::size_t n = 0; n < v.size(); ++n) cut[n] = v[n] * cutoff[n];
      for (int b : g.boundary()) cut[b] = 0.0;
      psi = normalize_probe(problem, ScalarField(problem.grid_ptr(), cut));
      if (max_third_difference(g, std::vector<double>(psi.values().begin(), psi.values().end())) <= cfg.theta) break;
      const int more = std::max(1, passes);
      for (int k = 0; k < more; ++k) smooth_once(g, v);
      passes += more;
    }
    out.push_back(std::move(psi));
  }
  return out;
}

double theta_value(const Problem& problem, const ScalarField& u, const ScalarField& f, const ScalarField& psi) {
  const Grid& g = problem.grid();
  double pmax = 0.0;
  for (double x : psi.values()) pmax = std::max(pmax, std::abs(x));
  if (pmax == 0.0) throw InvalidArgument("theta: variation vanishes identically");
  for (int b : g.boundary()) {
    if (std::abs(psi[b]) > 1e-12 * pmax) throw InvalidArgument("theta: variation does not vanish on the boundary");
  }
  const NodalSupremand ns = evaluate_supremand(problem, feasible_field(problem, u), 1);
  const Jet2Field jp = compute_variation_jet(*problem.stencil, psi);
  const int xi = g.dim() + 1;
  double best = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < g.num_nodes(); ++n) {
    if (!g.measured(n)) continue;
    const JetVector& d = ns.values[n].gradient;
    double lin = d[0] * jp.value[n] + d[xi] * jp.elliptic[n];
    for (int a = 0; a < g.dim(); ++a) lin += d[1 + a] * jp.gradient[n][a];
    best = std::max(best, sgn(f[n]) * lin);
  }
  return best;
}

ThetaReport theta_probe(const Problem& problem, const ScalarField& u, const ScalarField& f,
                        const std::vector<ScalarField>& variations) {
  ThetaReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < variations.size(); ++i) {
    const double v = theta_value(problem, u, f, variations[i]);
    rep.values.push_back(v);
    if (v < rep.min_value) {
      rep.min_value = v;
      rep.argmin = static_cast<int>(i);
    }
  }
  return rep;
}

std::vector<double> default_t_factors() { return {-1e-1, -1e-2, -1e-3, 1e-3, 1e-2, 1e-1}; }

ProbeReport minimality_probe(const Problem& problem, const ScalarField& u, const std::vector<ScalarField>& family,
                             const std::vector<double>& t_factors, double slack) {
  const ScalarField v = feasible_field(problem, u);
  const double base = discrete_sup(problem, v);
  ProbeReport rep;
  rep.probes = static_cast<int>(family.size());
  for (double tf : t_factors) rep.t_grid.push_back(tf * base);
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (double t : rep.t_grid) {
      std::vector<double> moved(v.values().begin(), v.values().end());
      for (int n = 0; n < v.size(); ++n) moved[n] += t * family[i][n];
      const double after = discrete_sup(problem, ScalarField(v.grid_ptr(), std::move(moved)));
      if (after < base - slack) rep.violations.push_back({static_cast<int>(i), t, base, after});
    }
  }
  return rep;
}

ScalarField orient_dual(const Problem& problem, const ScalarField& u, const ScalarField& f, bool* flipped) {
  const std::vector<double> fv = supremand_values(problem, feasible_field(problem, u));
  const double s = weighted_dot(problem.grid(), f.values(), fv);
  if (flipped) *flipped = s < 0.0;
  if (s >= 0.0) return f;
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x = -x;
  return ScalarField(f.grid_ptr(), std::move(v));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "fail";
}

CertificationReport certify(const Problem& problem, const ScalarField& u, const std::optional<ScalarField>& f,
                            const CertificationOptions& options) {
  const Grid& g = problem.grid();
  const ScalarField v = feasible_field(problem, u);
  CertificationReport rep;
  rep.f_inf = discrete_sup(problem, v);
  rep.wrapped_f_inf = problem.spec->outer(rep.f_inf);
  rep.band_width = options.band_cells * g.max_spacing();
  rep.aronsson = aronsson_constancy(problem, v);

  std::vector<ScalarField> family = probe_family(problem, options.probes);
  for (const auto& extra : options.extra_probes) family.push_back(extra);
  rep.probes = minimality_probe(problem, v, family, options.t_factors, options.slack * rep.f_inf);
  if (!rep.probes.violations.empty()) {
    rep.reasons.push_back(std::to_string(rep.probes.violations.size()) + " probe directions decrease the sup");
  }

  if (rep.f_inf <= 1e-12) {
    rep.reasons.push_back("F vanishes identically; the system holds trivially");
    rep.verdict = rep.probes.violations.empty() ? Verdict::kPass : Verdict::kFail;
    return rep;
  }
  if (!f) throw InvalidArgument("certification needs a dual field when F does not vanish");

  const ScalarField fn = [&] {
    const auto w = g.weights();
    double l1 = 0.0;
    for (int n = 0; n < f->size(); ++n) l1 += w[n] * std::abs((*f)[n]);
    if (!(l1 > 0.0)) throw InvalidArgument("certification: dual field vanishes identically");
    std::vector<double> vals(f->values().begin(), f->values().end());
    for (double& x : vals) x /= l1;
    return orient_dual(problem, v, ScalarField(f->grid_ptr(), std::move(vals)), &rep.dual_flipped);
  }();
  rep.nodal = nodal_set(fn);
  const auto band = nodal_band(rep.nodal, g, rep.band_width);
  rep.aronsson = aronsson_constancy(problem, v, &band);
  rep.sign_law = check_sign_law(problem, v, fn, options.band_cells);
  rep.weak = weak_residual(problem, v, fn, bump_family(g));
  ProbeFamilyConfig tcfg = options.probes;
  tcfg.count = options.theta_count;
  tcfg.seed = options.probes.seed + 1;
  rep.theta = theta_probe(problem, v, fn, probe_family(problem, tcfg));

  bool fail = !rep.probes.violations.empty();
  bool unsure = false;
  auto grade = [&](double value, double tol, const std::string& what) {
    if (value > 10.0 * tol) {
      fail = true;
      rep.reasons.push_back(what + " above ten times its tolerance");
    } else if (value > tol) {
      unsure = true;
      rep.reasons.push_back(what + " between tolerance and ten times tolerance");
    }
  };
  grade(rep.sign_law.relative_residual, options.eq18_tolerance, "sign-law residual");
  grade(rep.weak.max_residual, options.weak_tolerance, "weak dual residual");
  if (rep.sign_law.sign_violations > 0) {
    fail = true;
    rep.reasons.push_back(std::to_string(rep.sign_law.sign_violations) + " sign violations outside the nodal band");
  }
  if (!(rep.theta.min_value > 0.0)) {
    fail = true;
    rep.reasons.push_back("theta probe not positive");
  }
  rep.verdict = fail ? Verdict::kFail : (unsure ? Verdict::kInconclusive : Verdict::kPass);
  return rep;
}

}  // namespace supremal
