#pragma once

// Run configuration, W-sweeps and their CSV / plot-data / report outputs.

#include "lssem/postprocess.hpp"
#include "lssem/problem.hpp"
#include "lssem/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lssem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNonconvergence = 1;
inline constexpr int kExitUsage = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string example = "example1";  // example1..example5 or custom
  double nu1 = 1.0;
  double nu2 = 1.0;
  std::vector<int> orders;
  double tolerance = 1e-12;
  int max_iterations = 20000;
  int variant = 0;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;
  int metric_extra_degree = 0;
  /// Off by default so that identical configs give identical CSV bytes.
  bool record_seconds = false;

  /// Throws ConfigError.
  void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. W accepts "2,4,6",
/// "2 4 6" or "2..8". Throws ConfigError on unknown keys or bad values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

struct SweepRow {
  int order = 0;
  ErrorReport errors;
  SolveReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<SlopeFit> slope_u;
  std::optional<SlopeFit> slope_p;
  std::string failure;  // breakdown message, empty otherwise
  int exit_code = kExitOk;
};

inline constexpr const char* kCsvHeader = "W,E_u_H1,E_p_L2,E_c_L2,iters,rel_residual,seconds";
std::string csv_row(const SweepRow& row, bool record_seconds);

/// Resolves config.example; throws ConfigError for "custom" or unknown ids.
ProblemSpec config_problem(const RunConfig& config);

/// Solve and measure errors at one order.
SweepRow run_order(const Mesh& mesh, const ProblemSpec& problem, const RunConfig& config,
                   int order);

/// Writes errors.csv (appended row by row), plot.dat and report.json into
/// config.output_dir. A custom problem replaces the built-in lookup.
SweepResult run_sweep(const RunConfig& config, const ProblemSpec* custom = nullptr);

/// Machine-readable report text for a sweep.
std::string sweep_report(const RunConfig& config, const SweepResult& result);

}  // namespace lssem
