#pragma once

// Subcommands of the `supremal` tool. Each returns a process exit code:
// 0 ok/pass, 2 bad config or arguments, 3 solver failure, 4 certification
// fail, 5 inconclusive.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "supremal/characterization.hpp"
#include "supremal/config.hpp"
#include "supremal/oracle_1d.hpp"

namespace supremal::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverFailure = 3, kCertificationFail = 4, kInconclusive = 5 };

int exit_code(Verdict v);

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> ladder;
  bool emit_fields = false;  // forces field output on
};

/// Loads the config and applies command-line overrides.
RunConfig resolve_config(const std::string& path, const Overrides& ov);

/// Parses "2,4,8"; throws ConfigError at path "--ladder".
std::vector<double> parse_ladder(const std::string& text);

nlohmann::ordered_json to_json(const StageStats& s);
nlohmann::ordered_json to_json(const ContinuationReport& r);
nlohmann::ordered_json to_json(const CertificationReport& r);
nlohmann::ordered_json to_json(const PiecewiseQuadratic& pq);
nlohmann::ordered_json to_json(const ConvexityCertificate& c);

/// Writes JSON with a trailing newline; wall-clock fields are never included.
void write_json(const std::string& path, const nlohmann::ordered_json& doc);

int cmd_solve(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& config, const std::string& u_csv, const std::string& f_csv, const Overrides& ov,
               std::ostream& out, std::ostream& err);
int cmd_dual(const std::string& config, const std::string& u_csv, const Overrides& ov, std::ostream& out,
             std::ostream& err);
int cmd_oracle(const std::vector<double>& data, std::ostream& out, std::ostream& err);
int cmd_convexity(const std::string& config, const Overrides& ov, std::ostream& out, std::ostream& err);

/// Argument parsing and dispatch.
int run(int argc, char** argv);

}  // namespace supremal::cli
