#include "hddr/cli.hpp"

#include "hddr/csv_io.hpp"
#include "hddr/errors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

namespace hddr {

void validate_config(const RunConfig& cfg) {
  if (cfg.k_folds < 2) throw std::invalid_argument("--k-folds must be at least 2");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw std::invalid_argument("--alpha must lie in [0, 1]");
  }
  if (cfg.workers && *cfg.workers < 1) throw std::invalid_argument("--workers must be at least 1");
  if (cfg.command == Command::test) {
    if (!cfg.input_path) throw std::invalid_argument("test requires --input-path");
    const bool col = cfg.propensity_col.has_value();
    const bool value = cfg.propensity_value.has_value();
    if (cfg.method == Method::known_propensity && col == value) {
      throw std::invalid_argument(
          "known-propensity requires exactly one of --propensity-col and --propensity-value");
    }
    if (cfg.method != Method::known_propensity && (col || value)) {
      throw std::invalid_argument("--propensity-col/--propensity-value only apply to known-propensity");
    }
    if (value && !(*cfg.propensity_value > 0.0 && *cfg.propensity_value < 1.0)) {
      throw std::invalid_argument("--propensity-value must lie in (0, 1)");
    }
  } else {
    if (cfg.reps < 1) throw std::invalid_argument("--reps must be at least 1");
    if (cfg.outcome_link != Link::identity) {
      throw std::invalid_argument("simulate generates a continuous outcome; use --outcome-link identity");
    }
    if (cfg.propensity_col || cfg.propensity_value) {
      throw std::invalid_argument("simulate uses the true propensity for known-propensity");
    }
    if (cfg.n && *cfg.n < 2) throw std::invalid_argument("--n must be at least 2");
    if (cfg.p && *cfg.p < 100) throw std::invalid_argument("--p must be at least 100");
  }
}

int resolve_workers(const RunConfig& cfg) {
  if (cfg.workers) return *cfg.workers;
  if (const char* env = std::getenv("HDDR_WORKERS"); env && *env) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (*end != '\0' || value < 1 || value > 4096) {
      throw std::invalid_argument("HDDR_WORKERS must be a positive integer");
    }
    return static_cast<int>(value);
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

TestResult run_test_command(const RunConfig& cfg) {
  validate_config(cfg);
  const CsvTable table = read_csv(*cfg.input_path);
  CsvDataset parsed = dataset_from_table(table, cfg.outcome_col, cfg.exposure_col,
                                         cfg.propensity_col);
  MethodOptions options;
  options.outcome_link = cfg.outcome_link;
  options.nuisance.k_folds = cfg.k_folds;
  options.nuisance.seed = cfg.seed;
  if (cfg.method == Method::known_propensity) {
    options.propensity = cfg.propensity_value
                             ? Vector::Constant(parsed.data.n(), *cfg.propensity_value)
                             : *parsed.propensity;
  }
  return run_method(parsed.data, cfg.method, options);
}

SimReport run_simulate_command(const RunConfig& cfg, std::ostream* progress) {
  validate_config(cfg);
  const int workers = resolve_workers(cfg);
  auto report_progress = [progress](const std::string& label, int done, int total) {
    if (!progress) return;
    const int step = std::max(1, total / 20);
    if (done % step == 0 || done == total) {
      *progress << label << ": " << done << "/" << total << " replications\n" << std::flush;
    }
  };

  const bool single = cfg.n || cfg.p || cfg.method_given;
  if (!single) return reproduce_table1(cfg.reps, cfg.seed, workers, {{200, 200}, {500, 500}},
                                       report_progress);

  SimReport report;
  report.master_seed = cfg.seed;
  report.alpha = cfg.alpha;
  report.reps = cfg.reps;
  SimCell cell;
  cell.n = cfg.n.value_or(200);
  cell.p = cfg.p.value_or(200);
  cell.misspecified = cfg.misspecified;
  const std::vector<Method> methods =
      cfg.method_given ? std::vector<Method>{cfg.method} : table1_methods();
  MonteCarloConfig mc;
  mc.reps = cfg.reps;
  mc.alpha = cfg.alpha;
  mc.master_seed = cfg.seed;
  mc.workers = workers;
  mc.k_folds = cfg.k_folds;
  const std::string label = "n=" + std::to_string(cell.n) + " p=" + std::to_string(cell.p) +
                            (cell.misspecified ? " misspecified" : " correct");
  mc.progress = [&](int done, int total) { report_progress(label, done, total); };
  try {
    cell.methods = monte_carlo(methods, build_dgp_params(cell.n, cell.p, cell.misspecified), mc);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  report.cells.push_back(std::move(cell));
  return report;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case Errc::invalid_probability:
      case Errc::wrong_link:
      case Errc::fold_too_small: return kExitUsage;
      default: return kExitSolver;
    }
  }
  if (dynamic_cast<const CsvError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) {
    return kExitUsage;
  }
  return kExitSolver;
}

namespace {

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output_path) {
    write_text_file(*cfg.output_path, text);
  } else {
    out << text;
  }
}

}  // namespace

int cmd_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const TestResult result = run_test_command(cfg);
    TestReportContext context;
    context.input_path = *cfg.input_path;
    context.outcome_col = cfg.outcome_col;
    context.exposure_col = cfg.exposure_col;
    context.outcome_link = cfg.outcome_link;
    context.k_folds = cfg.k_folds;
    context.seed = cfg.seed;
    context.alpha = cfg.alpha;
    if (const auto it = result.diagnostics.find("converged");
        it != result.diagnostics.end() && it->second == 0.0) {
      err << "warning: a nuisance fit did not meet its convergence criterion\n";
    }
    emit(cfg, format_test_result(result, context, cfg.format), out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const SimReport report = run_simulate_command(cfg, &err);
    emit(cfg, format_sim_report(report, cfg.format), out);
    for (const SimCell& cell : report.cells) {
      if (!cell.error.empty()) {
        err << "error: cell n=" << cell.n << " p=" << cell.p << " failed: " << cell.error << '\n';
        return kExitSolver;
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly robust score tests of conditional independence in high dimensions"};
  app.require_subcommand(1, 1);
  CLI::App* test = app.add_subcommand("test", "Test the null on a CSV dataset");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo size study");

  RunConfig cfg;
  std::string input_path, propensity_col, output_path;
  std::string method = "pmle-dr";
  std::string outcome_link = "identity";
  std::string format = "text";
  double propensity_value = 0.0;
  int workers = 0;
  int n = 0;
  int p = 0;
  const std::vector<std::string> methods{"pmle-dr",      "br-dr",          "known-propensity",
                                         "naive-forced", "naive-unforced", "pds-cv"};

  for (CLI::App* sub : {test, simulate}) {
    sub->add_option("--method", method, "Test to run")->check(CLI::IsMember(methods));
    sub->add_option("--outcome-link", outcome_link, "Outcome working-model link")
        ->check(CLI::IsMember({"identity", "logit"}));
    sub->add_option("--k-folds", cfg.k_folds, "Cross-validation folds");
    sub->add_option("--seed", cfg.seed, "Fold seed (test) or master seed (simulate)");
    sub->add_option("--alpha", cfg.alpha, "Significance level");
    sub->add_option("--output-path", output_path, "Write the report here instead of stdout");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "text", "json"}));
  }
  test->add_option("--input-path", input_path, "CSV file with a header row")->required();
  test->add_option("--outcome-col", cfg.outcome_col, "Outcome column name");
  test->add_option("--exposure-col", cfg.exposure_col, "Exposure column name");
  CLI::Option* propensity_col_opt =
      test->add_option("--propensity-col", propensity_col, "Column of known propensities");
  CLI::Option* propensity_value_opt =
      test->add_option("--propensity-value", propensity_value, "Known constant propensity");
  simulate->add_option("--reps", cfg.reps, "Replications per cell");
  CLI::Option* workers_opt =
      simulate->add_option("--workers", workers, "Worker threads (default: HDDR_WORKERS or all cores)");
  CLI::Option* n_opt = simulate->add_option("--n", n, "Sample size of a single cell");
  CLI::Option* p_opt = simulate->add_option("--p", p, "Covariate count of a single cell");
  simulate->add_flag("--misspecified", cfg.misspecified, "Absolute-value outcome model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* used = test->parsed() ? test : simulate;
  try {
    cfg.command = test->parsed() ? Command::test : Command::simulate;
    cfg.method = parse_method(method);
    cfg.method_given = used->count("--method") > 0;
    cfg.outcome_link = parse_link(outcome_link);
    cfg.format = parse_format(format);
    if (!input_path.empty()) cfg.input_path = input_path;
    if (!output_path.empty()) cfg.output_path = output_path;
    if (propensity_col_opt->count() > 0) cfg.propensity_col = propensity_col;
    if (propensity_value_opt->count() > 0) cfg.propensity_value = propensity_value;
    if (workers_opt->count() > 0) cfg.workers = workers;
    if (n_opt->count() > 0) cfg.n = n;
    if (p_opt->count() > 0) cfg.p = p;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return cfg.command == Command::test ? cmd_test(cfg, out, err) : cmd_simulate(cfg, out, err);
}

}  // namespace hddr
