#include "hddr/report.hpp"

#include "hddr/csv_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace hddr {

std::string to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::text: return "text";
    case ReportFormat::json: return "json";
  }
  return "unknown";
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "text") return ReportFormat::text;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv, text or json)");
}

namespace {

std::string num(double x) { return std::isfinite(x) ? format_double(x) : "NA"; }

// Quotes a free-text CSV field when it needs it.
std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string fixed(double x, int digits) {
  if (!std::isfinite(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string general(double x) {
  if (!std::isfinite(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

std::string test_csv(const TestResult& r, const TestReportContext& c) {
  std::ostringstream out;
  out << "field,value\n";
  out << "schema_version," << kSchemaVersion << '\n';
  out << "method," << csv_text(r.method) << '\n';
  out << "n," << r.n << '\n';
  out << "t_n," << num(r.t_n) << '\n';
  out << "p_value," << num(r.p_value) << '\n';
  out << "score_mean," << num(r.score_mean) << '\n';
  out << "score_sd," << num(r.score_sd) << '\n';
  out << "alpha," << num(c.alpha) << '\n';
  out << "reject," << (r.p_value <= c.alpha ? 1 : 0) << '\n';
  out << "outcome_link," << to_string(c.outcome_link) << '\n';
  out << "k_folds," << c.k_folds << '\n';
  out << "seed," << c.seed << '\n';
  for (const auto& [key, value] : r.diagnostics) out << key << ',' << num(value) << '\n';
  return out.str();
}

std::string test_json(const TestResult& r, const TestReportContext& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "test";
  j["input_path"] = c.input_path;
  j["outcome_col"] = c.outcome_col;
  j["exposure_col"] = c.exposure_col;
  j["outcome_link"] = to_string(c.outcome_link);
  j["k_folds"] = c.k_folds;
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  nlohmann::ordered_json res;
  res["method"] = r.method;
  res["n"] = r.n;
  res["t_n"] = r.t_n;
  res["p_value"] = r.p_value;
  res["score_mean"] = r.score_mean;
  res["score_sd"] = r.score_sd;
  res["reject"] = r.p_value <= c.alpha;
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [key, value] : r.diagnostics) diag[key] = value;
  res["diagnostics"] = diag;
  j["result"] = res;
  return j.dump(2) + "\n";
}

std::string test_text(const TestResult& r, const TestReportContext& c) {
  std::ostringstream out;
  out << "method       " << r.method << '\n';
  if (!c.input_path.empty()) out << "input        " << c.input_path << '\n';
  out << "n            " << r.n << '\n';
  out << "T_n          " << general(r.t_n) << '\n';
  out << "p-value      " << general(r.p_value) << '\n';
  out << "decision     " << (r.p_value <= c.alpha ? "reject" : "do not reject") << " at alpha "
      << general(c.alpha) << '\n';
  out << "score mean   " << general(r.score_mean) << '\n';
  out << "score sd     " << general(r.score_sd) << '\n';
  for (const auto& [key, value] : r.diagnostics) {
    out << pad(key, 22) << ' ' << general(value) << '\n';
  }
  return out.str();
}

std::string sim_csv(const SimReport& report) {
  std::ostringstream out;
  out << "n,p,misspecified,alpha,master_seed,reps_requested,method,rejection_rate,reps,failures,"
         "mc_se,error\n";
  for (const SimCell& cell : report.cells) {
    const std::string prefix = std::to_string(cell.n) + "," + std::to_string(cell.p) + "," +
                               (cell.misspecified ? "1" : "0") + "," + num(report.alpha) + "," +
                               std::to_string(report.master_seed) + "," +
                               std::to_string(report.reps) + ",";
    if (!cell.error.empty()) {
      out << prefix << "NA,NA,NA,NA,NA," << csv_text(cell.error) << '\n';
      continue;
    }
    for (const MethodSummary& m : cell.methods) {
      out << prefix << to_string(m.method) << ',' << num(m.rejection_rate) << ',' << m.reps << ','
          << m.failures << ',' << num(m.mc_se) << ',' << csv_text(m.first_error) << '\n';
    }
  }
  return out.str();
}

std::string sim_json(const SimReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "simulate";
  j["master_seed"] = report.master_seed;
  j["alpha"] = report.alpha;
  j["reps"] = report.reps;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const SimCell& cell : report.cells) {
    nlohmann::ordered_json c;
    c["n"] = cell.n;
    c["p"] = cell.p;
    c["misspecified"] = cell.misspecified;
    if (!cell.error.empty()) c["error"] = cell.error;
    nlohmann::ordered_json methods = nlohmann::ordered_json::array();
    for (const MethodSummary& m : cell.methods) {
      nlohmann::ordered_json e;
      e["method"] = to_string(m.method);
      e["rejection_rate"] = m.rejection_rate;
      e["reps"] = m.reps;
      e["failures"] = m.failures;
      e["mc_se"] = m.mc_se;
      if (!m.first_error.empty()) e["first_error"] = m.first_error;
      methods.push_back(e);
    }
    c["methods"] = methods;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string sim_text(const SimReport& report) {
  std::ostringstream out;
  out << "Type I error at alpha = " << general(report.alpha) << ", " << report.reps
      << " replications per cell, master seed " << report.master_seed << "\n\n";
  out << pad("n", 5, true) << pad("p", 6, true) << "  " << pad("outcome", 14)
      << pad("method", 16) << pad("rate", 7, true) << pad("mc_se", 8, true)
      << pad("reps", 6, true) << pad("failed", 8, true) << '\n';
  for (const SimCell& cell : report.cells) {
    const std::string head = pad(std::to_string(cell.n), 5, true) +
                             pad(std::to_string(cell.p), 6, true) + "  " +
                             pad(cell.misspecified ? "misspecified" : "correct", 14);
    if (!cell.error.empty()) {
      out << head << "-- not run: " << cell.error << '\n';
      continue;
    }
    for (const MethodSummary& m : cell.methods) {
      out << head << pad(to_string(m.method), 16) << pad(fixed(m.rejection_rate, 3), 7, true)
          << pad(fixed(m.mc_se, 4), 8, true) << pad(std::to_string(m.reps), 6, true)
          << pad(std::to_string(m.failures), 8, true) << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string format_test_result(const TestResult& result, const TestReportContext& context,
                               ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return test_csv(result, context);
    case ReportFormat::json: return test_json(result, context);
    case ReportFormat::text: return test_text(result, context);
  }
  return {};
}

std::string format_sim_report(const SimReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return sim_csv(report);
    case ReportFormat::json: return sim_json(report);
    case ReportFormat::text: return sim_text(report);
  }
  return {};
}

}  // namespace hddr
