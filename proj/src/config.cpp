#include "supremal/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "supremal/error.hpp"

namespace supremal {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string at_index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void only_keys(const json& obj, const std::string& path, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(join(path, key), "missing required field");
  return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
  return d;
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at_index(path, i)));
  return out;
}

template <class T>
void optional_field(const json& obj, const std::string& path, const std::string& key, T& target) {
  if (!obj.contains(key)) return;
  const std::string p = join(path, key);
  if constexpr (std::is_same_v<T, double>) {
    target = as_number(obj.at(key), p);
  } else if constexpr (std::is_same_v<T, int>) {
    target = as_int(obj.at(key), p);
  } else if constexpr (std::is_same_v<T, bool>) {
    target = as_bool(obj.at(key), p);
  } else if constexpr (std::is_same_v<T, std::string>) {
    target = as_string(obj.at(key), p);
  } else {
    target = as_numbers(obj.at(key), p);
  }
}

Interval parse_interval(const json& v, const std::string& path) {
  const auto pair = as_numbers(v, path);
  if (pair.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  if (!(pair[0] < pair[1])) throw ConfigError(path, "lo must be below hi");
  return {pair[0], pair[1]};
}

void parse_box(const json& obj, const std::string& path, SampleBox& box) {
  only_keys(obj, path, {"eta", "p", "xi"});
  if (obj.contains("eta")) box.eta = parse_interval(obj["eta"], join(path, "eta"));
  if (obj.contains("xi")) box.xi = parse_interval(obj["xi"], join(path, "xi"));
  if (obj.contains("p")) {
    const json& p = obj["p"];
    const std::string pp = join(path, "p");
    if (!p.is_array() || static_cast<int>(p.size()) != box.dim) {
      throw ConfigError(pp, "expected one interval per dimension");
    }
    for (int k = 0; k < box.dim; ++k) box.p[k] = parse_interval(p[k], at_index(pp, k));
  }
}

FunctionBlock parse_function(const json& obj, const std::string& path) {
  FunctionBlock fb;
  if (obj.is_string()) {
    fb.kind = obj.get<std::string>();
  } else {
    only_keys(obj, path, {"kind", "coeffs"});
    fb.kind = as_string(require(obj, path, "kind"), join(path, "kind"));
    optional_field(obj, path, "coeffs", fb.coeffs);
  }
  if (fb.kind == "polynomial") {
    if (fb.coeffs.empty()) throw ConfigError(join(path, "coeffs"), "polynomial needs coefficients");
  } else if (fb.kind != "identity" && fb.kind != "cube" && fb.kind != "sinh") {
    throw ConfigError(join(path, "kind"), "unknown function '" + fb.kind + "' (identity, cube, sinh, polynomial)");
  }
  return fb;
}

SupremandBlock parse_supremand(const json& obj, const std::string& path, int dim) {
  only_keys(obj, path, {"family", "state", "outer", "xi_range", "box", "inner", "phi"});
  SupremandBlock sb;
  sb.family = as_string(require(obj, path, "family"), join(path, "family"));
  sb.box.dim = dim;
  if (sb.family == "pure_xi") return sb;
  if (sb.family == "phi_wrapped") {
    sb.inner = std::make_shared<SupremandBlock>(parse_supremand(require(obj, path, "inner"), join(path, "inner"), dim));
    if (sb.inner->family == "phi_wrapped") throw ConfigError(join(path, "inner.family"), "cannot wrap twice");
    sb.phi = parse_function(require(obj, path, "phi"), join(path, "phi"));
    return sb;
  }
  if (sb.family != "additive" && sb.family != "multiplicative") {
    throw ConfigError(join(path, "family"),
                      "unknown family '" + sb.family + "' (pure_xi, additive, multiplicative, phi_wrapped)");
  }
  const std::string sp = join(path, "state");
  const json& st = require(obj, path, "state");
  only_keys(st, sp, {"kind", "amplitude", "frequency", "eta_coeffs", "scale", "rate"});
  sb.state.kind = as_string(require(st, sp, "kind"), join(sp, "kind"));
  if (sb.state.kind != "none" && sb.state.kind != "oscillating" && sb.state.kind != "exponential") {
    throw ConfigError(join(sp, "kind"), "unknown state term '" + sb.state.kind + "' (none, oscillating, exponential)");
  }
  optional_field(st, sp, "amplitude", sb.state.amplitude);
  optional_field(st, sp, "frequency", sb.state.frequency);
  optional_field(st, sp, "eta_coeffs", sb.state.eta_coeffs);
  optional_field(st, sp, "scale", sb.state.scale);
  optional_field(st, sp, "rate", sb.state.rate);
  sb.outer = parse_function(require(obj, path, "outer"), join(path, "outer"));
  optional_field(obj, path, "xi_range", sb.xi_range);
  if (!(sb.xi_range > 0.0)) throw ConfigError(join(path, "xi_range"), "must be positive");
  if (obj.contains("box")) parse_box(obj["box"], join(path, "box"), sb.box);
  return sb;
}

ScalarFunction make_function(const FunctionBlock& fb) {
  if (fb.kind == "cube") return ScalarFunction::cube();
  if (fb.kind == "sinh") return ScalarFunction::sinh();
  if (fb.kind == "polynomial") return ScalarFunction::polynomial(fb.coeffs);
  return ScalarFunction::identity();
}

StateTerm make_state(const StateBlock& sb, int dim) {
  if (sb.kind == "oscillating") return oscillating_state_term(dim, sb.amplitude, sb.frequency, sb.eta_coeffs);
  if (sb.kind == "exponential") return exponential_state_term(sb.scale, sb.rate);
  return [](const Vec2&, double) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
}

SupremandSpec make_spec(const SupremandBlock& sb, int dim, const DomainBlock& domain) {
  if (sb.family == "pure_xi") return pure_xi(dim);
  if (sb.family == "phi_wrapped") return wrap_phi(make_spec(*sb.inner, dim, domain), make_function(sb.phi));
  if (sb.family == "additive") return make_additive(dim, make_state(sb.state, dim), make_function(sb.outer), sb.xi_range);
  SampleBox box = sb.box;
  for (int k = 0; k < dim; ++k) {
    box.x_lower[k] = domain.lower[k];
    box.x_upper[k] = domain.upper[k];
  }
  return make_multiplicative(dim, make_state(sb.state, dim), make_function(sb.outer), box);
}

double monomial(double x, int k) { return k == 0 ? 1.0 : std::pow(x, k); }

}  // namespace

RunConfig parse_config(const json& doc) {
  only_keys(doc, "", {"domain", "A", "supremand", "boundary", "schedule", "verify", "convexity", "seed", "output"});
  RunConfig cfg;

  const json& dom = require(doc, "", "domain");
  only_keys(dom, "domain", {"dim", "lower", "upper", "nodes"});
  cfg.domain.dim = as_int(require(dom, "domain", "dim"), "domain.dim");
  const int dim = cfg.domain.dim;
  if (dim != 1 && dim != 2) throw ConfigError("domain.dim", "must be 1 or 2");
  cfg.domain.lower = as_numbers(require(dom, "domain", "lower"), "domain.lower");
  cfg.domain.upper = as_numbers(require(dom, "domain", "upper"), "domain.upper");
  const json& nodes = require(dom, "domain", "nodes");
  if (!nodes.is_array()) throw ConfigError("domain.nodes", "expected an array of integers");
  for (std::size_t i = 0; i < nodes.size(); ++i) cfg.domain.nodes.push_back(as_int(nodes[i], at_index("domain.nodes", i)));
  for (const auto& [name, size] : {std::pair<std::string, std::size_t>{"lower", cfg.domain.lower.size()},
                                   {"upper", cfg.domain.upper.size()},
                                   {"nodes", cfg.domain.nodes.size()}}) {
    if (static_cast<int>(size) != dim) throw ConfigError("domain." + name, "expected " + std::to_string(dim) + " entries");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(cfg.domain.lower[k] < cfg.domain.upper[k])) throw ConfigError(at_index("domain.upper", k), "must exceed lower");
    if (cfg.domain.nodes[k] < 5) throw ConfigError(at_index("domain.nodes", k), "need at least 5 nodes");
  }

  const json& a = require(doc, "", "A");
  if (!a.is_array() || static_cast<int>(a.size()) != dim) throw ConfigError("A", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
  for (int r = 0; r < dim; ++r) {
    const auto row = as_numbers(a[r], at_index("A", r));
    if (static_cast<int>(row.size()) != dim) throw ConfigError(at_index("A", r), "wrong row length");
    cfg.a.insert(cfg.a.end(), row.begin(), row.end());
  }

  cfg.supremand = parse_supremand(require(doc, "", "supremand"), "supremand", dim);

  if (doc.contains("boundary")) {
    const json& b = doc["boundary"];
    only_keys(b, "boundary", {"preset", "u", "du", "terms"});
    cfg.boundary.preset = as_string(require(b, "boundary", "preset"), "boundary.preset");
    if (cfg.boundary.preset == "hermite") {
      if (dim != 1) throw ConfigError("boundary.preset", "hermite data is one-dimensional");
      const auto u = as_numbers(require(b, "boundary", "u"), "boundary.u");
      const auto du = as_numbers(require(b, "boundary", "du"), "boundary.du");
      if (u.size() != 2) throw ConfigError("boundary.u", "expected [u(a), u(b)]");
      if (du.size() != 2) throw ConfigError("boundary.du", "expected [u'(a), u'(b)]");
      cfg.boundary.ua = u[0];
      cfg.boundary.ub = u[1];
      cfg.boundary.dua = du[0];
      cfg.boundary.dub = du[1];
    } else if (cfg.boundary.preset == "polynomial") {
      const json& terms = require(b, "boundary", "terms");
      if (!terms.is_array() || terms.empty()) throw ConfigError("boundary.terms", "expected a non-empty array");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = at_index("boundary.terms", i);
        only_keys(terms[i], tp, {"coeff", "px", "py"});
        MonomialTerm t;
        t.coeff = as_number(require(terms[i], tp, "coeff"), join(tp, "coeff"));
        optional_field(terms[i], tp, "px", t.px);
        optional_field(terms[i], tp, "py", t.py);
        if (t.px < 0 || t.py < 0) throw ConfigError(tp, "negative exponent");
        if (dim == 1 && t.py != 0) throw ConfigError(join(tp, "py"), "y exponent on a 1D domain");
        cfg.boundary.terms.push_back(t);
      }
    } else if (cfg.boundary.preset != "zero") {
      throw ConfigError("boundary.preset", "unknown preset '" + cfg.boundary.preset + "' (zero, hermite, polynomial)");
    }
  }

  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    only_keys(s, "schedule", {"ladder", "tolerance", "max_iterations", "epsilon", "policy", "early_stop"});
    auto& sch = cfg.schedule;
    optional_field(s, "schedule", "ladder", sch.ladder);
    optional_field(s, "schedule", "tolerance", sch.tolerance);
    optional_field(s, "schedule", "max_iterations", sch.max_iterations);
    optional_field(s, "schedule", "epsilon", sch.epsilon);
    optional_field(s, "schedule", "early_stop", sch.early_stop);
    std::string policy = "fixed";
    optional_field(s, "schedule", "policy", policy);
    if (policy == "fixed") {
      sch.policy = EpsilonPolicy::kFixed;
    } else if (policy == "anchored") {
      sch.policy = EpsilonPolicy::kAnchored;
    } else {
      throw ConfigError("schedule.policy", "unknown policy '" + policy + "' (fixed, anchored)");
    }
    try {
      sch.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("schedule", e.what());
    }
  }

  if (doc.contains("verify")) {
    const json& v = doc["verify"];
    only_keys(v, "verify", {"eq18_tolerance", "weak_tolerance", "band_cells", "probe_count", "theta_count",
                            "smoothing_passes", "theta", "dual_mode"});
    auto& vb = cfg.verify;
    optional_field(v, "verify", "eq18_tolerance", vb.eq18_tolerance);
    optional_field(v, "verify", "weak_tolerance", vb.weak_tolerance);
    optional_field(v, "verify", "band_cells", vb.band_cells);
    optional_field(v, "verify", "probe_count", vb.probe_count);
    optional_field(v, "verify", "theta_count", vb.theta_count);
    optional_field(v, "verify", "smoothing_passes", vb.smoothing_passes);
    optional_field(v, "verify", "theta", vb.theta);
    if (v.contains("dual_mode")) {
      try {
        vb.dual_mode = parse_dual_mode(as_string(v["dual_mode"], "verify.dual_mode"));
      } catch (const InvalidArgument& e) {
        throw ConfigError("verify.dual_mode", e.what());
      }
    }
    if (!(vb.eq18_tolerance > 0.0)) throw ConfigError("verify.eq18_tolerance", "must be positive");
    if (!(vb.weak_tolerance > 0.0)) throw ConfigError("verify.weak_tolerance", "must be positive");
    if (vb.band_cells < 0.0) throw ConfigError("verify.band_cells", "must be nonnegative");
    if (vb.probe_count < 0) throw ConfigError("verify.probe_count", "must be nonnegative");
    if (vb.theta_count < 1) throw ConfigError("verify.theta_count", "must be positive");
    if (vb.smoothing_passes < 0) throw ConfigError("verify.smoothing_passes", "must be nonnegative");
    if (!(vb.theta > 0.0)) throw ConfigError("verify.theta", "must be positive");
  }

  cfg.convexity.box.dim = dim;
  if (doc.contains("convexity")) {
    const json& c = doc["convexity"];
    only_keys(c, "convexity", {"box", "candidates", "per_axis"});
    if (c.contains("box")) parse_box(c["box"], "convexity.box", cfg.convexity.box);
    optional_field(c, "convexity", "candidates", cfg.convexity.candidates);
    optional_field(c, "convexity", "per_axis", cfg.convexity.per_axis);
    if (cfg.convexity.candidates.size() < 2) throw ConfigError("convexity.candidates", "need at least two exponents");
    for (std::size_t i = 0; i < cfg.convexity.candidates.size(); ++i) {
      if (cfg.convexity.candidates[i] < 2.0 || (i > 0 && cfg.convexity.candidates[i] <= cfg.convexity.candidates[i - 1])) {
        throw ConfigError(at_index("convexity.candidates", i), "exponents must be >= 2 and increasing");
      }
    }
    if (cfg.convexity.per_axis < 2) throw ConfigError("convexity.per_axis", "need at least 2 points per axis");
  }
  for (int k = 0; k < dim; ++k) {
    cfg.convexity.box.x_lower[k] = cfg.domain.lower[k];
    cfg.convexity.box.x_upper[k] = cfg.domain.upper[k];
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    only_keys(o, "output", {"directory", "emit_fields"});
    optional_field(o, "output", "directory", cfg.output_directory);
    optional_field(o, "output", "emit_fields", cfg.emit_fields);
    if (cfg.output_directory.empty()) throw ConfigError("output.directory", "must not be empty");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

GridPtr build_domain(const RunConfig& cfg) {
  try {
    return build_grid(cfg.domain.dim, cfg.domain.lower, cfg.domain.upper, cfg.domain.nodes);
  } catch (const InvalidArgument& e) {
    throw ConfigError("domain", e.what());
  }
}

SupremandSpec build_supremand(const RunConfig& cfg) {
  try {
    return make_spec(cfg.supremand, cfg.domain.dim, cfg.domain);
  } catch (const InvalidArgument& e) {
    throw ConfigError("supremand", e.what());
  } catch (const NumericalError& e) {
    throw ConfigError("supremand", e.what());
  }
}

Problem build_problem(const RunConfig& cfg) {
  const GridPtr grid = build_domain(cfg);
  std::optional<EllipticMatrix> a;
  try {
    a.emplace(cfg.domain.dim, cfg.a);
  } catch (const InvalidArgument& e) {
    throw ConfigError("A", e.what());
  }
  SupremandSpec spec = build_supremand(cfg);
  ClampedData data = ClampedData::zero(*grid);
  const BoundaryBlock& b = cfg.boundary;
  if (b.preset == "hermite") {
    data = ClampedData::hermite_1d(*grid, b.ua, b.dua, b.ub, b.dub);
  } else if (b.preset == "polynomial") {
    const auto terms = b.terms;
    auto value = [terms](const Vec2& x) {
      double s = 0.0;
      for (const auto& t : terms) s += t.coeff * monomial(x[0], t.px) * monomial(x[1], t.py);
      return s;
    };
    auto grad = [terms](const Vec2& x) {
      Vec2 g{0.0, 0.0};
      for (const auto& t : terms) {
        if (t.px > 0) g[0] += t.coeff * t.px * monomial(x[0], t.px - 1) * monomial(x[1], t.py);
        if (t.py > 0) g[1] += t.coeff * t.py * monomial(x[0], t.px) * monomial(x[1], t.py - 1);
      }
      return g;
    };
    data = ClampedData::from_function(*grid, value, grad);
  }
  try {
    return make_problem(grid, *a, std::move(spec), std::move(data));
  } catch (const InvalidArgument& e) {
    throw ConfigError("boundary", e.what());
  }
}

CertificationOptions certification_options(const RunConfig& cfg) {
  CertificationOptions opt;
  opt.eq18_tolerance = cfg.verify.eq18_tolerance;
  opt.weak_tolerance = cfg.verify.weak_tolerance;
  opt.band_cells = cfg.verify.band_cells;
  opt.probes.count = cfg.verify.probe_count;
  opt.probes.smoothing_passes = cfg.verify.smoothing_passes;
  opt.probes.theta = cfg.verify.theta;
  opt.probes.seed = cfg.seed;
  opt.theta_count = cfg.verify.theta_count;
  return opt;
}

}  // namespace supremal
