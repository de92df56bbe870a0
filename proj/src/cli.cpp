#include "supremal/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "supremal/error.hpp"
#include "supremal/field_io.hpp"
#include "supremal/pde_solver.hpp"

namespace supremal::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::kPass: return kOk;
    case Verdict::kFail: return kCertificationFail;
    case Verdict::kInconclusive: return kInconclusive;
  }
  return kCertificationFail;
}

std::vector<double> parse_ladder(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--ladder", "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--ladder", "empty ladder");
  return out;
}

RunConfig resolve_config(const std::string& path, const Overrides& ov) {
  RunConfig cfg = load_config(path);
  if (ov.out) cfg.output_directory = *ov.out;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.emit_fields) cfg.emit_fields = true;
  if (ov.ladder) {
    cfg.schedule.ladder = *ov.ladder;
    try {
      cfg.schedule.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("--ladder", e.what());
    }
  }
  return cfg;
}

ordered_json to_json(const StageStats& s) {
  ordered_json j;
  j["p"] = s.p;
  j["e_p"] = s.e_p;
  j["energy"] = s.energy;
  j["initial_energy"] = s.initial_energy;
  j["sup"] = s.sup;
  j["gradient_norm"] = s.gradient_norm;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["termination"] = s.termination;
  j["guard_lhs"] = s.guard_lhs;
  j["guard_rhs"] = s.guard_rhs;
  j["energy_trace"] = s.energy_trace;
  return j;
}

ordered_json to_json(const ContinuationReport& r) {
  ordered_json j;
  j["success"] = r.success;
  j["error"] = r.error;
  j["f_inf"] = r.f_inf;
  j["wrapped_f_inf"] = r.wrapped_f_inf;
  j["early_stopped"] = r.early_stopped;
  j["e_trace_monotone"] = r.e_trace_monotone;
  ordered_json trace = ordered_json::array();
  for (const auto& s : r.stages) trace.push_back(s.e_p);
  j["e_trace"] = trace;
  ordered_json stages = ordered_json::array();
  for (const auto& s : r.stages) stages.push_back(to_json(s));
  j["stages"] = stages;
  if (r.duals) {
    j["duals"] = {{"p", r.duals->p}, {"e_p", r.duals->e_p}};
  } else {
    j["duals"] = nullptr;
  }
  return j;
}

ordered_json to_json(const CertificationReport& r) {
  ordered_json j;
  j["verdict"] = to_string(r.verdict);
  j["reasons"] = r.reasons;
  j["f_inf"] = r.f_inf;
  j["wrapped_f_inf"] = r.wrapped_f_inf;
  j["dual_flipped"] = r.dual_flipped;
  j["sign_law"] = {{"residual", r.sign_law.residual},
                   {"relative_residual", r.sign_law.relative_residual},
                   {"sign_violations", r.sign_law.sign_violations},
                   {"worst_node", r.sign_law.worst_node},
                   {"band_nodes", r.sign_law.band_nodes},
                   {"defect_measure", r.sign_law.defect_measure}};
  j["weak_residual"] = {{"max_residual", r.weak.max_residual},
                        {"worst_bump", r.weak.worst_bump},
                        {"family_size", r.weak.family_size}};
  j["aronsson"] = {{"osc", r.aronsson.osc},
                   {"osc_outside_band", r.aronsson.osc_outside_band},
                   {"gradient_max", r.aronsson.gradient_max},
                   {"defect_measure", r.aronsson.defect_measure}};
  ordered_json points = ordered_json::array();
  for (const auto& p : r.nodal.points) points.push_back(p);
  j["nodal_set"] = {{"crossing_cells", r.nodal.crossing_cells},
                    {"measure_proxy", r.nodal.measure_proxy},
                    {"band_width", r.band_width},
                    {"points", points}};
  j["theta"] = {{"min_value", r.theta.min_value}, {"argmin", r.theta.argmin}, {"count", r.theta.values.size()}};
  ordered_json violations = ordered_json::array();
  for (const auto& v : r.probes.violations) {
    violations.push_back({{"probe", v.probe}, {"t", v.t}, {"sup_before", v.sup_before}, {"sup_after", v.sup_after}});
  }
  j["minimality_probe"] = {{"probes", r.probes.probes}, {"t_grid", r.probes.t_grid}, {"violations", violations}};
  return j;
}

ordered_json to_json(const PiecewiseQuadratic& pq) {
  ordered_json j;
  j["s"] = pq.s;
  j["xbar"] = pq.xbar;
  j["sign_pattern"] = pq.sign_pattern();
  j["smooth"] = pq.smooth;
  return j;
}

ordered_json to_json(const ConvexityCertificate& c) {
  ordered_json j;
  if (c.p_bar) {
    j["p_bar"] = *c.p_bar;
  } else {
    j["p_bar"] = nullptr;
  }
  j["worst_eigenvalue"] = c.worst_eigenvalue;
  j["sample_count"] = c.sample_count;
  j["candidates"] = c.candidates;
  j["candidate_worst"] = c.candidate_worst;
  return j;
}

void write_json(const std::string& path, const ordered_json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << "\n";
}

namespace {

std::string prepare_output(const RunConfig& cfg) {
  fs::create_directories(cfg.output_directory);
  return cfg.output_directory;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ScalarField normalized_stage_dual(const Problem& problem, const ScalarField& u, double p) {
  return normalize_dual(extract_duals(problem, u, p).f);
}

}  // namespace

int cmd_solve(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<Problem> problem;
  try {
    cfg = resolve_config(config, ov);
    problem.emplace(build_problem(cfg));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string dir = prepare_output(cfg);

  ContinuationReport rep;
  try {
    rep = continuation_solve(*problem, cfg.schedule);
  } catch (const std::exception& e) {
    rep.success = false;
    rep.error = e.what();
  }
  write_json(in_dir(dir, "report.json"), to_json(rep));
  if (!rep.success || !rep.u) {
    err << "solver failure: " << rep.error << "\n";
    return kSolverFailure;
  }
  if (cfg.emit_fields) write_field_csv(in_dir(dir, "u.csv"), *rep.u);

  std::optional<ScalarField> f;
  if (rep.duals) {
    f = orient_dual(*problem, *rep.u, normalize_dual(rep.duals->f));
    if (cfg.emit_fields) write_field_csv(in_dir(dir, "f.csv"), *f);
  }
  CertificationReport cert;
  try {
    cert = certify(*problem, *rep.u, f, certification_options(cfg));
  } catch (const std::exception& e) {
    err << "certification error: " << e.what() << "\n";
    return kSolverFailure;
  }
  write_json(in_dir(dir, "certification.json"), to_json(cert));
  out << "f_inf " << format_number(rep.wrapped_f_inf) << " stages " << rep.stages.size() << " verdict "
      << to_string(cert.verdict) << "\n";
  return exit_code(cert.verdict);
}

int cmd_sweep(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<Problem> problem;
  try {
    cfg = resolve_config(config, ov);
    problem.emplace(build_problem(cfg));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string dir = prepare_output(cfg);
  std::ostringstream csv;
  csv << "p,e_p,eq18_residual,nodal_count\n";
  auto observer = [&](const StageStats& s, const ScalarField& u) {
    double residual = 0.0;
    int nodal = 0;
    if (s.sup > 1e-12) {
      const ScalarField f = orient_dual(*problem, u, normalized_stage_dual(*problem, u, s.p));
      residual = check_sign_law(*problem, u, f, cfg.verify.band_cells).relative_residual;
      nodal = count_sign_changes(f);
    }
    csv << format_number(s.p) << "," << format_number(s.e_p) << "," << format_number(residual) << "," << nodal << "\n";
  };
  ContinuationReport rep;
  try {
    rep = continuation_solve(*problem, cfg.schedule, std::nullopt, observer);
  } catch (const std::exception& e) {
    rep.success = false;
    rep.error = e.what();
  }
  std::ofstream(in_dir(dir, "sweep.csv")) << csv.str();
  out << csv.str();
  if (!rep.success) {
    err << "solver failure: " << rep.error << "\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_verify(const std::string& config, const std::string& u_csv, const std::string& f_csv, const Overrides& ov,
               std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<Problem> problem;
  std::optional<ScalarField> u, f;
  try {
    cfg = resolve_config(config, ov);
    problem.emplace(build_problem(cfg));
    u.emplace(read_field_csv(u_csv, problem->grid_ptr()));
    if (!f_csv.empty()) f.emplace(read_field_csv(f_csv, problem->grid_ptr()));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string dir = prepare_output(cfg);
  CertificationReport cert;
  try {
    cert = certify(*problem, *u, f, certification_options(cfg));
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  }
  const ordered_json doc = to_json(cert);
  write_json(in_dir(dir, "certification.json"), doc);
  out << doc.dump(2) << "\n";
  return exit_code(cert.verdict);
}

int cmd_dual(const std::string& config, const std::string& u_csv, const Overrides& ov, std::ostream& out,
             std::ostream& err) {
  RunConfig cfg;
  std::optional<Problem> problem;
  std::optional<ScalarField> u;
  try {
    cfg = resolve_config(config, ov);
    problem.emplace(build_problem(cfg));
    u.emplace(read_field_csv(u_csv, problem->grid_ptr()));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string dir = prepare_output(cfg);
  DualSolution sol{ScalarField::zeros(problem->grid_ptr())};
  try {
    sol = solve_dual(make_dual_problem(*problem, *u, cfg.verify.dual_mode));
  } catch (const std::exception& e) {
    err << "dual solve failed: " << e.what() << "\n";
    return kSolverFailure;
  }
  write_field_csv(in_dir(dir, "f.csv"), sol.f);
  ordered_json doc;
  doc["mode"] = to_string(sol.mode_used);
  doc["fell_back"] = sol.fell_back;
  doc["normalization"] = {{"kind", "weighted_l1"}, {"l1_norm_before", sol.l1_norm_before}};
  doc["nodal_count"] = sol.nodal_count;
  doc["null_dimension"] = sol.null_dimension;
  doc["smallest_singular_value"] = sol.smallest_singular_value;
  write_json(in_dir(dir, "dual.json"), doc);
  out << doc.dump(2) << "\n";
  return kOk;
}

int cmd_oracle(const std::vector<double>& data, std::ostream& out, std::ostream& err) {
  if (data.size() != 6) {
    err << "oracle expects six numbers: a b u(a) u'(a) u(b) u'(b)\n";
    return kConfigError;
  }
  try {
    const PiecewiseQuadratic pq = solve_exact(data[0], data[1], data[2], data[3], data[4], data[5]);
    out << to_json(pq).dump(2) << "\n";
  } catch (const InvalidArgument& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "oracle failed: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_convexity(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<SupremandSpec> spec;
  try {
    cfg = resolve_config(config, ov);
    spec.emplace(build_supremand(cfg));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string dir = prepare_output(cfg);
  const SupremandSpec& target = spec->optimization_target();
  const ConvexityCertificate cert =
      certify_convexity(target, cfg.convexity.box, cfg.convexity.candidates, cfg.convexity.per_axis);
  ordered_json doc = to_json(cert);
  if (!target.depends_on_gradient()) {
    const EigenframeReport ef = check_eigenframe_condition(target, cfg.convexity.box, cfg.convexity.per_axis);
    doc["eigenframe"] = {{"pass", ef.pass},
                         {"max_coupling", ef.max_coupling},
                         {"min_sigma1", ef.min_sigma1},
                         {"min_sigma2", ef.min_sigma2},
                         {"implied_p_bar", ef.implied_p_bar}};
  }
  const AssumptionReport ar = check_assumptions(target, cfg.convexity.box, cfg.convexity.per_axis);
  ordered_json checks = ordered_json::array();
  for (const auto& c : ar.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}, {"detail", c.detail}});
  }
  doc["assumptions"] = {{"heuristic", ar.heuristic}, {"all_pass", ar.all_pass()}, {"checks", checks}};
  write_json(in_dir(dir, "convexity.json"), doc);
  out << doc.dump(2) << "\n";
  return cert.p_bar ? kOk : kCertificationFail;
}

int run(int argc, char** argv) {
  CLI::App app{"L-infinity second-order solver and certificate checker"};
  app.require_subcommand(1);

  std::string config, u_csv, f_csv, out_dir, ladder;
  std::uint64_t seed = 0;
  bool emit = false;
  std::vector<double> oracle_args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "probe and trial seed (overrides seed)");
    sub->add_option("--ladder", ladder, "comma-separated exponents (overrides schedule.ladder)");
    sub->add_flag("--emit-fields", emit, "write field CSVs");
  };
  CLI::App* solve = app.add_subcommand("solve", "p-continuation, dual extraction and certification");
  add_common(solve);
  CLI::App* sweep = app.add_subcommand("sweep", "per-stage CSV of p, e_p, eq18_residual, nodal_count");
  add_common(sweep);
  CLI::App* verify = app.add_subcommand("verify", "certify a given pair (u, f)");
  add_common(verify);
  verify->add_option("--u", u_csv, "candidate field CSV")->required();
  verify->add_option("--f", f_csv, "dual field CSV");
  CLI::App* dual = app.add_subcommand("dual", "solve the dual equation for a given u");
  add_common(dual);
  dual->add_option("--u", u_csv, "candidate field CSV")->required();
  CLI::App* oracle = app.add_subcommand("oracle", "exact 1D minimizer of max |u''|");
  oracle->add_option("data", oracle_args, "a b u(a) u'(a) u(b) u'(b)")->expected(6)->required()->allow_extra_args(false);
  CLI::App* convexity = app.add_subcommand("convexity", "convexity exponent certificate of the supremand");
  add_common(convexity);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  Overrides ov;
  ov.emit_fields = emit;
  try {
    if (!out_dir.empty()) ov.out = out_dir;
    if (!ladder.empty()) ov.ladder = parse_ladder(ladder);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  for (CLI::App* sub : {solve, sweep, verify, dual, convexity}) {
    if (sub->parsed() && sub->count("--seed")) ov.seed = seed;
  }

  if (solve->parsed()) return cmd_solve(config, ov, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(config, ov, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(config, u_csv, f_csv, ov, std::cout, std::cerr);
  if (dual->parsed()) return cmd_dual(config, u_csv, ov, std::cout, std::cerr);
  if (oracle->parsed()) return cmd_oracle(oracle_args, std::cout, std::cerr);
  return cmd_convexity(config, ov, std::cout, std::cerr);
}

}  // namespace supremal::cli
