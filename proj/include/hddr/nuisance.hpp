#pragma once

// Nuisance estimation for the doubly robust score: the plug-in strategy
// (penalized MLE with refits), the bias-reduced strategy (weighted Lasso fits
// solving the score's gradient equations in the l1 limit, with the
// alternating algorithm for binary outcomes), and the known-propensity case.

#include "hddr/model_core.hpp"
#include "hddr/penalized_glm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hddr {

enum class NuisanceMethod { pmle_dr, br_dr, known_propensity };

std::string to_string(NuisanceMethod method);

struct NuisanceOptions {
  int k_folds = 10;
  std::uint64_t seed = 1;
  /// Outer iteration cap for the alternating binary-outcome algorithm.
  int max_outer = 50;
  /// Stopping threshold on successive objective values of that algorithm.
  double outer_tolerance = 1e-4;
  SolverControl control;
};

/// Paired exposure / outcome working models used by the score.
struct NuisanceFit {
  /// Refitted exposure model; absent when the propensity is supplied.
  std::optional<WorkingModel> exposure_model;
  WorkingModel outcome_model;
  /// Supplied propensities (known-propensity method only).
  std::optional<Vector> known_propensity;

  /// Penalized (pre-refit) estimates.
  std::optional<WorkingModel> exposure_penalized;
  std::optional<WorkingModel> outcome_penalized;

  NuisanceMethod method = NuisanceMethod::pmle_dr;
  double lambda_gamma = 0.0;
  double lambda_beta = 0.0;
  bool refitted = true;
  bool converged = true;
  /// Objective values of the alternating algorithm, starting at step 0.
  std::optional<std::vector<double>> algorithm1_trace;
  int outer_iterations = 0;
  std::vector<int> dropped_exposure;
  std::vector<int> dropped_outcome;

  /// Fitted exposure means on L (clipped under the logit link).
  Vector exposure_mean(const Matrix& L) const;
  Vector outcome_mean(const Matrix& L) const;
};

/// w_i = p_i (1 - p_i) with p_i the clipped fitted mean; each in (0, 0.25].
struct BrWeights {
  Vector w;
};

BrWeights compute_br_weights(const WorkingModel& model, const Matrix& L);

/// Cross-validated l1 fits shared between methods run on the same data with
/// the same seed and fold count. Results are identical with or without it.
struct SharedFits {
  std::optional<CvLassoFit> exposure;           // logistic A on L, unit weights
  std::optional<CvLassoFit> outcome_identity;   // linear Y on L, unit weights
  std::optional<CvLassoFit> outcome_logit;      // logistic Y on L, unit weights
};

NuisanceFit estimate_pmle_dr(const Dataset& d, Link outcome_link, const NuisanceOptions& options,
                             SharedFits* shared = nullptr);

NuisanceFit estimate_br_dr_continuous(const Dataset& d, const NuisanceOptions& options,
                                      SharedFits* shared = nullptr);

NuisanceFit estimate_br_dr_binary(const Dataset& d, const NuisanceOptions& options,
                                  SharedFits* shared = nullptr);

/// Dispatches on the outcome link.
NuisanceFit estimate_br_dr(const Dataset& d, Link outcome_link, const NuisanceOptions& options,
                           SharedFits* shared = nullptr);

/// Known randomization probabilities, given per subject or as a logistic
/// model. The outcome model is an unweighted cross-validated l1 fit.
/// Throws Error(invalid_probability) for values outside (0, 1).
NuisanceFit known_propensity_fit(const Dataset& d, const Vector& pi_star, Link outcome_link,
                                 const NuisanceOptions& options, SharedFits* shared = nullptr);

NuisanceFit known_propensity_fit(const Dataset& d, const Vector& gamma_star, double intercept,
                                 Link outcome_link, const NuisanceOptions& options,
                                 SharedFits* shared = nullptr);

}  // namespace hddr
