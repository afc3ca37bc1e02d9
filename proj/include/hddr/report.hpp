#pragma once

// Machine-readable (CSV, JSON) and aligned-text views of test results and
// simulation reports. JSON documents carry "schema_version": 1.

#include "hddr/score_test.hpp"
#include "hddr/simulation.hpp"

#include <cstdint>
#include <string>

namespace hddr {

enum class ReportFormat { csv, text, json };

std::string to_string(ReportFormat format);
ReportFormat parse_format(const std::string& name);

inline constexpr int kSchemaVersion = 1;

/// Run settings echoed next to a single test result.
struct TestReportContext {
  std::string input_path;
  std::string outcome_col;
  std::string exposure_col;
  Link outcome_link = Link::identity;
  int k_folds = 10;
  std::uint64_t seed = 1;
  double alpha = 0.05;
};

/// CSV is two columns (field, value), one row per TestResult field and
/// diagnostic.
std::string format_test_result(const TestResult& result, const TestReportContext& context,
                               ReportFormat format);

/// CSV has one row per (cell, method); failed cells and methods without a
/// successful replication show NA with the error message.
std::string format_sim_report(const SimReport& report, ReportFormat format);

}  // namespace hddr
