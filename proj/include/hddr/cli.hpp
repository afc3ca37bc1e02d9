#pragma once

// Command-line entry points: `test` runs one test on a CSV dataset,
// `simulate` runs the size study. Exit codes: 0 success, 2 usage or
// validation failure, 3 solver failure.

#include "hddr/report.hpp"
#include "hddr/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace hddr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSolver = 3;

enum class Command { test, simulate };

struct RunConfig {
  Command command = Command::test;
  std::optional<std::string> input_path;
  std::string outcome_col = "y";
  std::string exposure_col = "a";
  Method method = Method::pmle_dr;
  Link outcome_link = Link::identity;
  std::optional<std::string> propensity_col;
  std::optional<double> propensity_value;
  int k_folds = 10;
  std::uint64_t seed = 1;
  int reps = 1000;
  double alpha = 0.05;
  /// Unset: HDDR_WORKERS, then the hardware thread count.
  std::optional<int> workers;
  std::optional<std::string> output_path;
  ReportFormat format = ReportFormat::text;

  // simulate only; any of these selects a single cell.
  std::optional<int> n;
  std::optional<int> p;
  bool method_given = false;
  bool misspecified = false;
};

/// Throws std::invalid_argument on an inconsistent configuration.
void validate_config(const RunConfig& cfg);

/// Flag, then the HDDR_WORKERS environment variable, then the hardware
/// thread count.
int resolve_workers(const RunConfig& cfg);

/// Reads the CSV and runs the configured test; throws on any failure.
TestResult run_test_command(const RunConfig& cfg);

/// Runs the configured study; throws on invalid configuration only.
SimReport run_simulate_command(const RunConfig& cfg, std::ostream* progress = nullptr);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

int cmd_test(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hddr
