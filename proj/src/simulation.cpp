#include "hddr/simulation.hpp"

#include "hddr/rng.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace hddr {

std::string to_string(Method method) {
  switch (method) {
    case Method::pmle_dr: return "pmle-dr";
    case Method::br_dr: return "br-dr";
    case Method::known_propensity: return "known-propensity";
    case Method::naive_forced: return "naive-forced";
    case Method::naive_unforced: return "naive-unforced";
    case Method::pds_cv: return "pds-cv";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (const Method m : {Method::pmle_dr, Method::br_dr, Method::known_propensity,
                         Method::naive_forced, Method::naive_unforced, Method::pds_cv}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

TestResult run_method(const Dataset& d, Method method, const MethodOptions& options,
                      SharedFits* shared) {
  ScoreTestOptions score;
  score.outcome_link = options.outcome_link;
  score.nuisance = options.nuisance;
  score.propensity = options.propensity;
  ComparatorSpec spec;
  spec.k_folds = options.nuisance.k_folds;
  spec.seed = options.nuisance.seed;

  switch (method) {
    case Method::pmle_dr: return run_test(d, NuisanceMethod::pmle_dr, score, shared);
    case Method::br_dr: return run_test(d, NuisanceMethod::br_dr, score, shared);
    case Method::known_propensity:
      return run_test(d, NuisanceMethod::known_propensity, score, shared);
    case Method::naive_forced: spec.kind = ComparatorKind::naive_forced; break;
    case Method::naive_unforced: spec.kind = ComparatorKind::naive_unforced; break;
    case Method::pds_cv: spec.kind = ComparatorKind::pds_cv; break;
  }
  if (options.outcome_link != Link::identity) {
    throw std::invalid_argument(to_string(method) + " needs a continuous outcome (identity link)");
  }
  return run_comparator(d, spec, shared);
}

DgpParams build_dgp_params(int n, int p, bool misspecified) {
  if (p < 100) throw std::invalid_argument("the design needs p >= 100");
  if (n < 2) throw std::invalid_argument("the design needs n >= 2");
  DgpParams params;
  params.n = n;
  params.p = p;
  params.misspecified_outcome = misspecified;
  const double root_n = std::sqrt(static_cast<double>(n));
  Vector b = Vector::Zero(p);
  Vector g = Vector::Zero(p);
  // Positions below are 1-based.
  for (int j = 1; j <= 19; ++j) {
    b[j - 1] = 2.0 * std::log(21.0 - j) / root_n;
    g[j - 1] = 40.0 * std::log(21.0 - j) / root_n;
  }
  for (int j = 82; j <= 100; ++j) b[j - 1] = 10.0 * std::log(j - 80.0) / root_n;
  params.beta = 2.0 * b / b.norm();
  params.gamma = 3.0 * g / g.norm();
  return params;
}

Vector true_propensity(const DgpParams& params, const Matrix& L) {
  const Vector eta = (L * params.gamma).array() + params.gamma0;
  return eta.unaryExpr([](double t) { return expit(t); });
}

Vector true_outcome_mean(const DgpParams& params, const Matrix& L) {
  if (!params.misspecified_outcome) return (L * params.beta).array() + params.beta0;
  Matrix T = L;
  const Eigen::Index k = std::min<Eigen::Index>(3, T.cols());
  T.leftCols(k) = T.leftCols(k).cwiseAbs();
  return (T * params.beta).array() + params.beta0;
}

Dataset generate_dataset(const DgpParams& params, std::uint64_t seed) {
  const Eigen::Index n = params.n;
  const Eigen::Index p = params.p;
  Dataset d;
  d.L.resize(n, p);
  PhiloxStream cov(seed, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.L(i, j) = cov.normal();
  }
  const Vector pi = true_propensity(params, d.L);
  PhiloxStream exposure(seed, 1);
  d.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) d.a[i] = exposure.uniform() < pi[i] ? 1.0 : 0.0;
  const Vector m = true_outcome_mean(params, d.L);
  PhiloxStream noise(seed, 2);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) d.y[i] = m[i] + noise.normal();
  d.column_names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) d.column_names.push_back("L" + std::to_string(j + 1));
  return d;
}

std::uint64_t replication_data_seed(std::uint64_t master, int rep) {
  return derive_seed(master, static_cast<std::uint64_t>(rep), 0);
}

std::uint64_t replication_fold_seed(std::uint64_t master, int rep) {
  return derive_seed(master, static_cast<std::uint64_t>(rep), 1);
}

std::vector<MethodSummary> monte_carlo(const std::vector<Method>& methods,
                                       const DgpParams& params, const MonteCarloConfig& config) {
  if (config.reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  const int reps = config.reps;
  const std::size_t m = methods.size();
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> p_values(m, std::vector<double>(static_cast<std::size_t>(reps), kNaN));
  std::vector<std::vector<std::string>> errors(m, std::vector<std::string>(static_cast<std::size_t>(reps)));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;

  auto worker = [&]() {
    for (int r = next++; r < reps; r = next++) {
      const Dataset d = generate_dataset(params, replication_data_seed(config.master_seed, r));
      MethodOptions options;
      options.nuisance = config.nuisance;
      options.nuisance.k_folds = config.k_folds;
      options.nuisance.seed = replication_fold_seed(config.master_seed, r);
      SharedFits shared;
      for (std::size_t k = 0; k < m; ++k) {
        const auto idx = static_cast<std::size_t>(r);
        try {
          if (methods[k] == Method::known_propensity) {
            options.propensity = true_propensity(params, d.L);
          }
          p_values[k][idx] = run_method(d, methods[k], options, &shared).p_value;
        } catch (const std::exception& e) {
          errors[k][idx] = e.what();
        }
      }
      const int finished = ++done;
      if (config.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        config.progress(finished, reps);
      }
    }
  };

  const int workers = std::max(1, std::min(config.workers, reps));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<MethodSummary> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    MethodSummary& s = out[k];
    s.method = methods[k];
    int rejections = 0;
    for (int r = 0; r < reps; ++r) {
      const double pv = p_values[k][static_cast<std::size_t>(r)];
      if (std::isnan(pv)) {
        ++s.failures;
        if (s.first_error.empty()) s.first_error = errors[k][static_cast<std::size_t>(r)];
        continue;
      }
      ++s.reps;
      if (pv <= config.alpha) ++rejections;
    }
    if (s.reps > 0) {
      s.rejection_rate = static_cast<double>(rejections) / s.reps;
      s.mc_se = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / s.reps);
    } else {
      s.rejection_rate = kNaN;
      s.mc_se = kNaN;
    }
    s.p_values = std::move(p_values[k]);
  }
  return out;
}

MethodSummary monte_carlo_type1(Method method, const DgpParams& params,
                                const MonteCarloConfig& config) {
  return monte_carlo({method}, params, config).front();
}

std::vector<Method> table1_methods() {
  return {Method::naive_forced, Method::naive_unforced, Method::pds_cv, Method::pmle_dr,
          Method::br_dr};
}

SimReport reproduce_table1(int reps, std::uint64_t master_seed, int workers,
                           const std::vector<std::pair<int, int>>& sizes,
                           const std::function<void(const std::string&, int, int)>& progress) {
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  SimReport report;
  report.master_seed = master_seed;
  report.reps = reps;
  for (const auto& [n, p] : sizes) {
    for (const bool misspecified : {false, true}) {
      SimCell cell;
      cell.n = n;
      cell.p = p;
      cell.misspecified = misspecified;
      try {
        MonteCarloConfig config;
        config.reps = reps;
        config.alpha = report.alpha;
        config.master_seed = master_seed;
        config.workers = workers;
        if (progress) {
          const std::string label = "n=" + std::to_string(n) + " p=" + std::to_string(p) +
                                    (misspecified ? " misspecified" : " correct");
          config.progress = [&progress, label](int done, int total) { progress(label, done, total); };
        }
        cell.methods = monte_carlo(table1_methods(), build_dgp_params(n, p, misspecified), config);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace hddr
