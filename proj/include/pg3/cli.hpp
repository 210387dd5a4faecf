#pragma once

#include "pg3/projective.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pg3::cli {

enum ExitCode : int { kPass = 0, kVerificationFailure = 1, kUsageError = 2 };

/// Everything a run depends on. Defaults match `pg3 --help`.
struct RunConfig {
  std::string command;  // classify | replay | clifford-parallel | audit-spread | limits | fixed-lines
  std::string target;   // replay target, e.g. "c5"
  std::string flow_case;
  std::map<std::string, double> params;
  std::optional<std::vector<double>> matrix;  // 16 entries, row-major
  Tolerances tolerances = kDefaultTolerances;
  double classify_tol = 1e-6;
  double limit_tol = 1e-8;
  std::string schedule = "geometric";  // geometric | discrete
  double t0 = 0.5;
  double ratio = 1.3;
  int steps = 40;
  bool backward = false;
  std::uint64_t samples = 100;
  std::uint64_t seed = 7;
  int grid = 201;
  int n_max = 1000;
  std::string witness = "clifford";  // clifford | sheared
  std::optional<std::vector<double>> point;
  std::optional<std::vector<double>> line;  // 8 entries (two points) or 6 (Pluecker)
  std::string format = "json";
  std::string output;      // empty: stdout
  std::string trace_file;  // replay CSV trace alongside JSON

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& c);
/// Throws pg3::Error on malformed input.
RunConfig config_from_json(const nlohmann::json& j);

/// Default tolerances with PG3_TOL_REPRESENTATION, PG3_TOL_RESIDUAL and
/// PG3_TOL_DECISION applied when set.
Tolerances tolerances_from_environment();

/// Runs one command line (argv without the program name).
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pg3::cli
