#include "supremal/supremand.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "supremal/error.hpp"

namespace supremal {

JetVector make_jet_argument(int dim, double eta, const Vec2& p, double xi) {
  JetVector z(dim + 2);
  z[0] = eta;
  for (int k = 0; k < dim; ++k) z[1 + k] = p[k];
  z[dim + 1] = xi;
  return z;
}

SupremandSpec::SupremandSpec(Definition def) : def_(std::move(def)) {
  if (def_.dim < 1 || def_.dim > kMaxDim) throw InvalidArgument("supremand: dimension must be 1 or 2");
  if (!def_.evaluate) throw InvalidArgument("supremand: missing evaluator");
  if (!(def_.monotonicity > 0.0)) throw InvalidArgument("supremand: monotonicity constant must be positive");
  if (!(def_.growth_exponent > 0.0 && def_.growth_exponent < 1.0)) {
    throw InvalidArgument("supremand: growth exponent must lie in (0, 1)");
  }
}

double SupremandSpec::value(const Vec2& x, const JetVector& z) const {
  SupremandValue out;
  def_.evaluate(x, z, 0, out);
  return out.value;
}

SupremandValue SupremandSpec::evaluate(const Vec2& x, const JetVector& z, int order) const {
  SupremandValue out;
  const int m = jet_size();
  if (order >= 1) out.gradient = JetVector::Zero(m);
  if (order >= 2) out.hessian = JetMatrix::Zero(m, m);
  def_.evaluate(x, z, order, out);
  return out;
}

double SupremandSpec::zero_level(const Vec2& x, double eta, const Vec2& p) const {
  if (def_.zero_level) return def_.zero_level(x, eta, p);
  JetVector z = make_jet_argument(dim(), eta, p, 0.0);
  const int k = xi_index();
  auto g = [&](double xi) {
    z[k] = xi;
    return value(x, z);
  };
  auto dg = [&](double xi) {
    z[k] = xi;
    return evaluate(x, z, 1).gradient[k];
  };
  return find_increasing_root(g, dg, 0.0);
}

StateTerm oscillating_state_term(int dim, double amplitude, double frequency, std::vector<double> eta_coeffs) {
  const ScalarFunction poly = ScalarFunction::polynomial(std::move(eta_coeffs));
  return [=](const Vec2& x, double eta) {
    double s = amplitude;
    for (int k = 0; k < dim; ++k) s *= std::sin(frequency * M_PI * x[k]);
    return std::array<double, 3>{s + poly(eta), poly.d1(eta), poly.d2(eta)};
  };
}

StateTerm exponential_state_term(double scale, double rate) {
  return [=](const Vec2&, double eta) {
    const double e = scale * std::exp(rate * eta);
    return std::array<double, 3>{e, rate * e, rate * rate * e};
  };
}

namespace {

double min_derivative(const ScalarFunction& f, double lo, double hi, int count) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) m = std::min(m, f.d1(lo + (hi - lo) * i / (count - 1)));
  return m;
}

std::vector<double> axis_points(Interval iv, int per_axis) {
  if (per_axis <= 1) return {0.5 * (iv.lo + iv.hi)};
  std::vector<double> pts(per_axis);
  for (int i = 0; i < per_axis; ++i) pts[i] = iv.lo + (iv.hi - iv.lo) * i / (per_axis - 1);
  return pts;
}

// axes in order: x_1..x_n, eta, p_1..p_n, xi
std::vector<Interval> box_axes(const SampleBox& box) {
  std::vector<Interval> axes;
  for (int k = 0; k < box.dim; ++k) axes.push_back({box.x_lower[k], box.x_upper[k]});
  axes.push_back(box.eta);
  for (int k = 0; k < box.dim; ++k) axes.push_back(box.p[k]);
  axes.push_back(box.xi);
  return axes;
}

SamplePoint point_from_axes(int dim, const std::vector<double>& v) {
  SamplePoint s;
  s.x = {v[0], dim == 2 ? v[1] : 0.0};
  s.z = JetVector(dim + 2);
  for (int k = 0; k < dim + 2; ++k) s.z[k] = v[dim + k];
  return s;
}

}  // namespace

std::vector<SamplePoint> lattice_samples(const SampleBox& box, int per_axis) {
  const auto axes = box_axes(box);
  std::vector<std::vector<double>> pts;
  for (const auto& iv : axes) pts.push_back(axis_points(iv, per_axis));
  std::vector<SamplePoint> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<double> v(axes.size());
  while (true) {
    for (std::size_t a = 0; a < axes.size(); ++a) v[a] = pts[a][idx[a]];
    out.push_back(point_from_axes(box.dim, v));
    std::size_t a = 0;
    while (a < axes.size() && ++idx[a] == pts[a].size()) idx[a++] = 0;
    if (a == axes.size()) break;
  }
  return out;
}

std::vector<SamplePoint> random_samples(const SampleBox& box, int count, std::uint64_t seed) {
  const auto axes = box_axes(box);
  std::mt19937_64 rng(seed);
  std::vector<SamplePoint> out;
  std::vector<double> v(axes.size());
  for (int i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < axes.size(); ++a) {
      v[a] = std::uniform_real_distribution<double>(axes[a].lo, axes[a].hi)(rng);
    }
    out.push_back(point_from_axes(box.dim, v));
  }
  return out;
}

SupremandSpec pure_xi(int dim) {
  SupremandSpec::Definition def;
  def.name = "pure_xi";
  def.dim = dim;
  def.depends_on_gradient = false;
  def.evaluate = [dim](const Vec2&, const JetVector& z, int order, SupremandValue& out) {
    out.value = z[dim + 1];
    if (order >= 1) out.gradient[dim + 1] = 1.0;
  };
  def.zero_level = [](const Vec2&, double, const Vec2&) { return 0.0; };
  def.envelope = [](double) { return 1.0; };
  return SupremandSpec(std::move(def));
}

SupremandSpec make_additive(int dim, StateTerm a, ScalarFunction big_a, double xi_range) {
  const double c = min_derivative(big_a, -xi_range, xi_range, 2001);
  if (!(c > 0.0)) {
    throw InvalidArgument("additive supremand: A is not strictly increasing on [-" + std::to_string(xi_range) +
                          ", " + std::to_string(xi_range) + "]");
  }
  SupremandSpec::Definition def;
  def.name = "additive";
  def.dim = dim;
  def.monotonicity = c;
  def.depends_on_gradient = false;
  def.evaluate = [=](const Vec2& x, const JetVector& z, int order, SupremandValue& out) {
    const double xi = z[dim + 1];
    const auto av = a(x, z[0]);
    out.value = av[0] + big_a(xi);
    if (order >= 1) {
      out.gradient[0] = av[1];
      out.gradient[dim + 1] = big_a.d1(xi);
    }
    if (order >= 2) {
      out.hessian(0, 0) = av[2];
      out.hessian(dim + 1, dim + 1) = big_a.d2(xi);
    }
  };
  def.zero_level = [=](const Vec2& x, double eta, const Vec2&) {
    const double shift = a(x, eta)[0];
    return find_increasing_root([&](double t) { return big_a(t) + shift; }, [&](double t) { return big_a.d1(t); });
  };
  return SupremandSpec(std::move(def));
}

SupremandSpec make_multiplicative(int dim, StateTerm a, ScalarFunction big_a, const SampleBox& box) {
  SampleBox xbox = box;
  xbox.dim = dim;
  xbox.xi = {0.0, 0.0};
  xbox.p = {Interval{0.0, 0.0}, Interval{0.0, 0.0}};
  double a_min = std::numeric_limits<double>::infinity();
  for (const auto& s : lattice_samples(xbox, 21)) a_min = std::min(a_min, a(s.x, s.z[0])[0]);
  if (!(a_min > 0.0)) throw InvalidArgument("multiplicative supremand: a is not uniformly positive on the box");
  const double da_min = min_derivative(big_a, box.xi.lo, box.xi.hi, 2001);
  if (!(da_min > 0.0)) throw InvalidArgument("multiplicative supremand: A is not strictly increasing on the box");
  const double root = find_increasing_root([&](double t) { return big_a(t); }, [&](double t) { return big_a.d1(t); });

  SupremandSpec::Definition def;
  def.name = "multiplicative";
  def.dim = dim;
  def.monotonicity = a_min * da_min;
  def.depends_on_gradient = false;
  def.evaluate = [=](const Vec2& x, const JetVector& z, int order, SupremandValue& out) {
    const double xi = z[dim + 1];
    const auto av = a(x, z[0]);
    const double bv = big_a(xi);
    out.value = av[0] * bv;
    if (order >= 1) {
      const double db = big_a.d1(xi);
      out.gradient[0] = av[1] * bv;
      out.gradient[dim + 1] = av[0] * db;
      if (order >= 2) {
        out.hessian(0, 0) = av[2] * bv;
        out.hessian(0, dim + 1) = out.hessian(dim + 1, 0) = av[1] * db;
        out.hessian(dim + 1, dim + 1) = av[0] * big_a.d2(xi);
      }
    }
  };
  def.zero_level = [root](const Vec2&, double, const Vec2&) { return root; };
  return SupremandSpec(std::move(def));
}

SupremandSpec wrap_phi(const SupremandSpec& spec, const ScalarFunction& phi) {
  if (spec.is_wrapped()) throw InvalidArgument("wrap_phi: spec is already wrapped");
  for (int i = 0; i < 100; ++i) {
    const double t = -5.0 + 10.0 * (i + 0.5) / 100.0;
    const double ft = phi(t), fm = phi(-t);
    if (std::abs(ft + fm) > 1e-12 * (1.0 + std::abs(ft))) throw InvalidArgument("wrap_phi: " + phi.name() + " is not odd");
    if (!(phi.d1(t) > 0.0)) throw InvalidArgument("wrap_phi: " + phi.name() + " is not strictly increasing");
  }
  auto inner = std::make_shared<const SupremandSpec>(spec);
  SupremandSpec::Definition def;
  def.name = "phi_wrapped(" + phi.name() + "," + spec.name() + ")";
  def.dim = spec.dim();
  def.monotonicity = spec.c();
  def.growth_exponent = spec.alpha();
  def.depends_on_gradient = spec.depends_on_gradient();
  def.evaluate = [inner, phi](const Vec2& x, const JetVector& z, int order, SupremandValue& out) {
    const SupremandValue f = inner->evaluate(x, z, order);
    out.value = phi(f.value);
    if (order >= 1) out.gradient = phi.d1(f.value) * f.gradient;
    if (order >= 2) out.hessian = phi.d2(f.value) * f.gradient * f.gradient.transpose() + phi.d1(f.value) * f.hessian;
  };
  def.zero_level = [inner](const Vec2& x, double eta, const Vec2& p) { return inner->zero_level(x, eta, p); };
  SupremandSpec wrapped(std::move(def));
  wrapped.inner_ = inner;
  wrapped.phi_ = phi;
  return wrapped;
}

double validate_partials(const SupremandSpec& spec, const SampleBox& box, int count, std::uint64_t seed) {
  SampleBox b = box;
  b.dim = spec.dim();
  const int m = spec.jet_size();
  double worst = 0.0;
  auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max(1.0, std::abs(an)); };
  for (const auto& s : random_samples(b, count, seed)) {
    const SupremandValue f = spec.evaluate(s.x, s.z, 2);
    for (int i = 0; i < m; ++i) {
      const double h = 1e-3 * (1.0 + std::abs(s.z[i]));
      auto shifted = [&](double t) {
        JetVector z = s.z;
        z[i] += t * h;
        return spec.evaluate(s.x, z, 1);
      };
      const auto p1 = shifted(1), m1 = shifted(-1), p2 = shifted(2), m2 = shifted(-2);
      const double dv = (8.0 * (p1.value - m1.value) - (p2.value - m2.value)) / (12.0 * h);
      worst = std::max(worst, rel(dv, f.gradient[i]));
      const JetVector dg = (8.0 * (p1.gradient - m1.gradient) - (p2.gradient - m2.gradient)) / (12.0 * h);
      for (int j = 0; j < m; ++j) worst = std::max(worst, rel(dg[j], f.hessian(j, i)));
    }
  }
  return worst;
}

SupremandSpec make_custom(SupremandSpec::Definition def, const SampleBox& box, std::uint64_t seed) {
  SupremandSpec spec(std::move(def));
  const double err = validate_partials(spec, box, 50, seed);
  if (!(err <= 1e-6)) {
    throw InvalidArgument("custom supremand '" + spec.name() + "': partials disagree with finite differences (" +
                          std::to_string(err) + ")");
  }
  return spec;
}

PowerDerivatives power_derivatives(const SupremandValue& f, double p) {
  PowerDerivatives out;
  const double a = std::abs(f.value);
  out.value = std::pow(a, p);
  const double w = p * std::pow(a, p - 2.0);
  out.gradient = w * f.value * f.gradient;
  out.hessian = w * (f.value * f.hessian + (p - 1.0) * f.gradient * f.gradient.transpose());
  return out;
}

ConvexityCertificate certify_convexity(const SupremandSpec& spec, const SampleBox& box,
                                       const std::vector<double>& candidates, int per_axis) {
  if (candidates.empty()) throw InvalidArgument("certify_convexity: no candidate exponents");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] < 2.0 || (i > 0 && !(candidates[i] > candidates[i - 1]))) {
      throw InvalidArgument("certify_convexity: candidates must be ascending and >= 2");
    }
  }
  SampleBox b = box;
  b.dim = spec.dim();
  ConvexityCertificate cert;
  cert.box = b;
  cert.candidates = candidates;
  cert.candidate_worst.assign(candidates.size(), std::numeric_limits<double>::infinity());
  const auto samples = lattice_samples(b, per_axis);
  cert.sample_count = static_cast<int>(samples.size());
  Eigen::SelfAdjointEigenSolver<JetMatrix> eig;
  for (const auto& s : samples) {
    const SupremandValue f = spec.evaluate(s.x, s.z, 2);
    const JetMatrix base = f.value * f.hessian;
    const JetMatrix outer = f.gradient * f.gradient.transpose();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      eig.compute(base + (candidates[i] - 1.0) * outer, Eigen::EigenvaluesOnly);
      cert.candidate_worst[i] = std::min(cert.candidate_worst[i], eig.eigenvalues().minCoeff());
    }
  }
  cert.worst_eigenvalue = cert.candidate_worst.back();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (cert.candidate_worst[i] >= -1e-9) {
      cert.p_bar = candidates[i];
      cert.worst_eigenvalue = cert.candidate_worst[i];
      break;
    }
  }
  return cert;
}

EigenframeReport check_eigenframe_condition(const SupremandSpec& spec, const SampleBox& box, int per_axis) {
  if (spec.depends_on_gradient()) {
    throw InvalidArgument("eigenframe condition requires a supremand without gradient dependence");
  }
  SampleBox b = box;
  b.dim = spec.dim();
  const int k = spec.xi_index();
  EigenframeReport rep;
  rep.pass = true;
  rep.min_sigma1 = rep.min_sigma2 = std::numeric_limits<double>::infinity();
  for (const auto& s : lattice_samples(b, per_axis)) {
    const SupremandValue f = spec.evaluate(s.x, s.z, 2);
    Eigen::Vector2d v(f.gradient[0], f.gradient[k]);
    Eigen::Matrix2d h;
    h << f.hessian(0, 0), f.hessian(0, k), f.hessian(k, 0), f.hessian(k, k);
    const Eigen::Matrix2d h2 = 2.0 * (v * v.transpose() + f.value * h);
    const Eigen::Vector2d e1 = v.normalized();
    const Eigen::Vector2d e2(-e1[1], e1[0]);
    const double coupling = std::abs(e1.dot(h2 * e2));
    const double s1 = e1.dot(h2 * e1), s2 = e2.dot(h2 * e2);
    rep.max_coupling = std::max(rep.max_coupling, coupling);
    rep.min_sigma1 = std::min(rep.min_sigma1, s1);
    rep.min_sigma2 = std::min(rep.min_sigma2, s2);
    if (coupling > 1e-8 * std::max(1.0, h2.norm()) || s2 < -1e-9) rep.pass = false;
    if (rep.sigma_samples.size() < 64) rep.sigma_samples.push_back({s1, s2});
    ++rep.sample_count;
  }
  const double m = std::ceil(std::max(0.0, -rep.min_sigma1));
  rep.implied_p_bar = std::max(2.0, m / spec.c() + 1.0);
  return rep;
}

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck& AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no assumption check named " + name);
}

namespace {

double state_size(const SupremandSpec& spec, const JetVector& z) {
  double t = std::abs(z[0]);
  double p2 = 0.0;
  for (int k = 0; k < spec.dim(); ++k) p2 += z[1 + k] * z[1 + k];
  return t + std::sqrt(p2);
}

struct GrowthSups {
  double dxi = 0.0;
  double dp = 0.0;
  double deta = 0.0;
};

GrowthSups growth_sups(const SupremandSpec& spec, SampleBox box, double xi_radius, int per_axis) {
  box.xi = {-xi_radius, xi_radius};
  GrowthSups g;
  const int k = spec.xi_index();
  for (const auto& s : lattice_samples(box, per_axis)) {
    const SupremandValue f = spec.evaluate(s.x, s.z, 1);
    const double scale = 1.0 + std::abs(s.z[k]);
    g.dxi = std::max(g.dxi, std::abs(f.gradient[k]));
    g.deta = std::max(g.deta, std::abs(f.gradient[0]) / scale);
    double p2 = 0.0;
    for (int i = 0; i < spec.dim(); ++i) p2 += f.gradient[1 + i] * f.gradient[1 + i];
    g.dp = std::max(g.dp, std::sqrt(p2) / scale);
  }
  return g;
}

}  // namespace

AssumptionReport check_assumptions(const SupremandSpec& spec, const SampleBox& box, int per_axis) {
  SampleBox b = box;
  b.dim = spec.dim();
  const auto samples = lattice_samples(b, per_axis);
  const int k = spec.xi_index();
  const double c = spec.c();

  AssumptionCheck mono{"monotonicity", true, std::numeric_limits<double>::infinity(), {}, ""};
  AssumptionCheck bracket{"zero_level_bound", true, 0.0, {}, ""};
  AssumptionCheck growth{"derivative_growth", true, 0.0, {}, ""};
  AssumptionCheck curv{"curvature_lower_bound", true, std::numeric_limits<double>::infinity(), {}, ""};
  AssumptionCheck sublin{"zero_level_sublinear", true, -std::numeric_limits<double>::infinity(), {}, ""};

  for (const auto& s : samples) {
    const SupremandValue f = spec.evaluate(s.x, s.z, 2);
    if (f.gradient[k] < mono.worst) {
      mono.worst = f.gradient[k];
      mono.witness = s;
    }
    if (f.hessian(k, k) < curv.worst) {
      curv.worst = f.hessian(k, k);
      curv.witness = s;
    }
    const double t = state_size(spec, s.z);
    Vec2 p{0.0, 0.0};
    for (int i = 0; i < spec.dim(); ++i) p[i] = s.z[1 + i];
    double root = 0.0;
    try {
      root = spec.zero_level(s.x, s.z[0], p);
    } catch (const NumericalError&) {
      bracket.pass = false;
      bracket.witness = s;
      bracket.detail = "zero level not found";
      continue;
    }
    if (std::abs(root) > bracket.worst) {
      bracket.worst = std::abs(root);
      bracket.witness = s;
    }
    if (spec.envelope() && std::abs(root) > spec.envelope()(t) * (1.0 + 1e-12)) bracket.pass = false;
    const double excess = std::abs(root) - (std::pow(t, spec.alpha()) + 1.0) / c;
    if (excess > sublin.worst) {
      sublin.worst = excess;
      sublin.witness = s;
    }
    const double dsize = std::max(f.gradient.norm(), f.hessian.norm());
    if (dsize > growth.worst) {
      growth.worst = dsize;
      growth.witness = s;
    }
    if (spec.envelope() && dsize > spec.envelope()(t + std::abs(s.z[k])) * (1.0 + 1e-12)) growth.pass = false;
    if (!std::isfinite(dsize)) growth.pass = false;
  }
  mono.pass = mono.worst >= c * (1.0 - 1e-12);
  mono.detail = "min dF/dxi against c";
  curv.pass = curv.worst >= -1.0 / c;
  curv.detail = "min d2F/dxi2 against -1/c";
  sublin.pass = sublin.worst <= 1e-12;
  sublin.detail = "max |zero level| - ((|eta|+|p|)^alpha + 1)/c";
  const char* fitted = "envelope fitted from samples";
  if (!spec.envelope()) {
    if (bracket.detail.empty()) bracket.detail = fitted;
    growth.detail = fitted;
  }

  // xi-independence of the growth bounds: sups over two dilated xi ranges
  const double r = std::max({1.0, std::abs(b.xi.lo), std::abs(b.xi.hi)});
  const GrowthSups g1 = growth_sups(spec, b, 4.0 * r, per_axis);
  const GrowthSups g2 = growth_sups(spec, b, 16.0 * r, per_axis);
  auto ratio = [](double hi, double lo) { return hi <= 1e-300 ? 1.0 : hi / std::max(lo, 1e-300); };
  AssumptionCheck xig{"xi_growth", true, 0.0, {}, "sup growth ratio under a 4x dilation of the xi range"};
  xig.worst = std::max({ratio(g2.dxi, g1.dxi), ratio(g2.dp, g1.dp), ratio(g2.deta, g1.deta)});
  xig.pass = xig.worst <= 2.0;
  xig.witness = samples.front();

  AssumptionReport rep;
  rep.checks = {mono, bracket, growth, curv, sublin, xig};
  return rep;
}

}  // namespace supremal
