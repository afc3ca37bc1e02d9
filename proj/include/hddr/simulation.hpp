#pragma once

// Null data-generating process with sparse confounding, the Monte Carlo
// driver for empirical Type I error, and the size table over the standard
// cells.

#include "hddr/comparators.hpp"
#include "hddr/model_core.hpp"
#include "hddr/nuisance.hpp"
#include "hddr/score_test.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hddr {

enum class Method { pmle_dr, br_dr, known_propensity, naive_forced, naive_unforced, pds_cv };

/// Kebab-case names: pmle-dr, br-dr, known-propensity, naive-forced,
/// naive-unforced, pds-cv.
std::string to_string(Method method);
Method parse_method(const std::string& name);

struct MethodOptions {
  Link outcome_link = Link::identity;
  /// Fold count and fold seed are used by every method.
  NuisanceOptions nuisance;
  /// Known-propensity method only.
  std::optional<Vector> propensity;
};

/// Runs any of the six tests. Comparators require an identity outcome link.
TestResult run_method(const Dataset& d, Method method, const MethodOptions& options,
                      SharedFits* shared = nullptr);

struct DgpParams {
  int n = 0;
  int p = 0;
  Vector beta;
  Vector gamma;
  double beta0 = 1.0;
  double gamma0 = 2.0;
  bool misspecified_outcome = false;
};

/// beta and gamma of the sparse confounding design: 38 and 19 nonzero
/// entries, scaled to Euclidean norms 2 and 3. Throws std::invalid_argument
/// when p < 100 or n < 2.
DgpParams build_dgp_params(int n, int p, bool misspecified);

/// expit(gamma0 + gamma' L_i).
Vector true_propensity(const DgpParams& params, const Matrix& L);

/// beta0 + beta' L_i, with |L_i1|, |L_i2|, |L_i3| under misspecification.
Vector true_outcome_mean(const DgpParams& params, const Matrix& L);

/// L iid N(0,1) (stream 0, row-major), A ~ Bernoulli(true propensity)
/// (stream 1 uniforms), Y = true mean + N(0,1) (stream 2). Y does not depend
/// on A. Deterministic in (params, seed).
Dataset generate_dataset(const DgpParams& params, std::uint64_t seed);

struct MethodSummary {
  Method method = Method::pmle_dr;
  double rejection_rate = 0.0;
  /// Replications that produced a p-value.
  int reps = 0;
  int failures = 0;
  double mc_se = 0.0;
  /// Per-replication p-values; NaN where the method failed.
  std::vector<double> p_values;
  std::string first_error;
};

struct MonteCarloConfig {
  int reps = 1000;
  double alpha = 0.05;
  std::uint64_t master_seed = 1;
  int workers = 1;
  int k_folds = 10;
  NuisanceOptions nuisance;
  /// Called after each finished replication with (done, total).
  std::function<void(int, int)> progress;
};

/// Seeds of replication r: the dataset uses derive_seed(master, r, 0) and
/// the fold assignment derive_seed(master, r, 1).
std::uint64_t replication_data_seed(std::uint64_t master, int rep);
std::uint64_t replication_fold_seed(std::uint64_t master, int rep);

/// Empirical size of each method over the same replicated datasets. Results
/// are independent of the worker count. A failing method in one replication
/// is counted in `failures` and excluded from its rate.
std::vector<MethodSummary> monte_carlo(const std::vector<Method>& methods,
                                       const DgpParams& params, const MonteCarloConfig& config);

MethodSummary monte_carlo_type1(Method method, const DgpParams& params,
                                const MonteCarloConfig& config);

struct SimCell {
  int n = 0;
  int p = 0;
  bool misspecified = false;
  std::vector<MethodSummary> methods;
  /// Set when the whole cell could not be run.
  std::string error;
};

struct SimReport {
  std::uint64_t master_seed = 1;
  double alpha = 0.05;
  int reps = 0;
  std::vector<SimCell> cells;
};

std::vector<Method> table1_methods();

/// Runs the five size-table methods over sizes x {correct, misspecified}.
/// Throws std::invalid_argument when reps < 1.
SimReport reproduce_table1(int reps, std::uint64_t master_seed, int workers,
                           const std::vector<std::pair<int, int>>& sizes = {{200, 200},
                                                                            {500, 500}},
                           const std::function<void(const std::string&, int, int)>& progress = {});

}  // namespace hddr
