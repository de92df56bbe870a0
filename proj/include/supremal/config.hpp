#pragma once

// Run configuration: JSON in, validated blocks out. Every rejection names the
// offending path (e.g. "supremand.outer.coeffs[1]").

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "supremal/characterization.hpp"
#include "supremal/minimizer.hpp"
#include "supremal/pde_solver.hpp"

namespace supremal {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DomainBlock {
  int dim = 1;
  std::vector<double> lower, upper;
  std::vector<int> nodes;
};

struct MonomialTerm {
  double coeff = 0.0;
  int px = 0, py = 0;
};

struct BoundaryBlock {
  std::string preset = "zero";  // zero | hermite | polynomial
  double ua = 0.0, dua = 0.0, ub = 0.0, dub = 0.0;
  std::vector<MonomialTerm> terms;
};

struct FunctionBlock {
  std::string kind = "identity";  // identity | cube | sinh | polynomial
  std::vector<double> coeffs;
};

struct StateBlock {
  std::string kind = "none";  // none | oscillating | exponential
  double amplitude = 0.0, frequency = 1.0;
  std::vector<double> eta_coeffs;
  double scale = 1.0, rate = 0.0;
};

struct SupremandBlock {
  std::string family = "pure_xi";  // pure_xi | additive | multiplicative | phi_wrapped
  StateBlock state;
  FunctionBlock outer;
  double xi_range = 10.0;
  SampleBox box;  // multiplicative positivity box
  std::shared_ptr<SupremandBlock> inner;  // phi_wrapped
  FunctionBlock phi;
};

struct VerifyBlock {
  double eq18_tolerance = 0.05;
  double weak_tolerance = 1e-3;
  double band_cells = 2.0;
  int probe_count = 100;
  int theta_count = 50;
  int smoothing_passes = 20;
  double theta = 200.0;
  DualMode dual_mode = DualMode::kAuto;
};

struct ConvexityBlock {
  SampleBox box;
  std::vector<double> candidates{2, 4, 8, 16, 32, 64, 128, 256};
  int per_axis = 7;
};

struct RunConfig {
  DomainBlock domain;
  std::vector<double> a;  // row-major dim x dim
  SupremandBlock supremand;
  BoundaryBlock boundary;
  ContinuationSchedule schedule;
  VerifyBlock verify;
  ConvexityBlock convexity;
  std::uint64_t seed = 1;
  std::string output_directory = "out";
  bool emit_fields = true;
};

RunConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a file; unreadable files and syntax errors become ConfigError at path "".
RunConfig load_config(const std::string& path);

GridPtr build_domain(const RunConfig& cfg);
SupremandSpec build_supremand(const RunConfig& cfg);
/// Grid, matrix, supremand and data assembled and cross-checked. Module
/// precondition failures are rethrown as ConfigError with the block path.
Problem build_problem(const RunConfig& cfg);
CertificationOptions certification_options(const RunConfig& cfg);

}  // namespace supremal
