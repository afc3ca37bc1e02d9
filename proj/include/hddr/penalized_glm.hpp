#pragma once

// Weighted l1-penalized linear and logistic regression.
//
// Objectives, with n = rows(L) and unnormalized observation weights w:
//
//   identity: (2n)^{-1} sum_i w_i (y_i - b0 - b'L_i)^2              + lambda sum_j pf_j s_j |b_j|
//   logit:    n^{-1} sum_i w_i [log(1 + exp(eta_i)) - y_i eta_i]     + lambda sum_j pf_j s_j |b_j|
//
// where s_j is the w-weighted standard deviation of column j. Columns are
// standardized internally (weighted mean 0, weighted variance 1), so the
// penalty above is the plain Lasso penalty on the standardized coefficients;
// all returned coefficients are on the original scale. pf_j are per-column
// penalty factors (default 1). Intercepts are never penalized.

#include "hddr/model_core.hpp"

#include <cstdint>
#include <vector>

namespace hddr {

struct SolverControl {
  /// Coordinate descent stops once a full sweep moves no standardized
  /// coefficient by more than this.
  double coef_tolerance = 1e-7;
  int max_sweeps = 10000;
  /// IRLS stops once the penalized objective changes by less than this
  /// (relative to its value).
  double objective_tolerance = 1e-8;
  int max_irls = 100;
  /// A fit is reported converged only if its KKT residual is within this.
  double kkt_tolerance = 1e-6;
};

struct LassoOptions {
  /// Empty means every column has penalty factor 1.
  Vector penalty_factors;
  SolverControl control;
};

struct LassoFit {
  WorkingModel model;
  double lambda = 0.0;
  /// Coordinate-descent sweeps (identity) or IRLS iterations (logit).
  int n_iter = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  /// Columns with zero weighted variance; their coefficients are 0.
  std::vector<int> degenerate_columns;
};

struct CvResult {
  Vector lambda_grid;  // descending
  Vector mean_cv_loss;
  double lambda_min = 0.0;
  Eigen::Index index_min = 0;
  std::vector<int> fold_assignment;  // fold id in [0, k) per observation
};

struct CvLassoFit {
  LassoFit fit;  // full-data fit at cv.lambda_min
  CvResult cv;
};

struct Refit {
  WorkingModel model;
  /// Support columns dropped because they were linearly dependent on
  /// lower-indexed columns (and the intercept).
  std::vector<int> dropped;
  bool converged = true;
};

double soft_threshold(double z, double t);

LassoFit fit_lasso_linear(const Matrix& L, const Vector& y, const Vector& obs_weights,
                          double lambda, const LassoOptions& options = {});

LassoFit fit_lasso_logistic(const Matrix& L, const Vector& y, const Vector& obs_weights,
                            double lambda, const LassoOptions& options = {});

LassoFit fit_lasso(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                   double lambda, const LassoOptions& options = {});

/// Warm-started fits along a descending grid.
std::vector<LassoFit> fit_lasso_path(const Matrix& L, const Vector& y, const Vector& obs_weights,
                                     Link link, const Vector& grid,
                                     const LassoOptions& options = {});

/// Smallest lambda whose solution has every penalized coefficient at zero.
double lambda_max(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                  const LassoOptions& options = {});

/// Log-spaced grid from lambda_max down to ratio * lambda_max. Returns {0}
/// when lambda_max is 0.
Vector make_lambda_grid(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int n_lambda, double ratio, const LassoOptions& options = {});

/// 100 values; ratio 0.01 when p >= n, otherwise 1e-4.
Vector default_lambda_grid(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                           const LassoOptions& options = {});

/// Seeded balanced fold assignment; fold sizes differ by at most one.
std::vector<int> assign_folds(Eigen::Index n, int k, std::uint64_t seed);

/// Index of the smallest loss; ties go to the earliest (largest) lambda.
Eigen::Index argmin_first(const Vector& losses);

/// k-fold cross-validation over a fixed grid. The held-out loss is the
/// weighted mean squared error (identity) or the weighted mean binomial
/// deviance (logit). Requires k >= 2 and either n >= 2k or k == n.
CvResult cross_validate(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int k, const Vector& grid, std::uint64_t seed,
                        const LassoOptions& options = {});

/// Default grid, cross-validation, then the full-data fit at lambda_min.
CvLassoFit fit_lasso_cv(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int k, std::uint64_t seed, const LassoOptions& options = {});

/// Unpenalized weighted least squares / logistic MLE on intercept plus the
/// support columns. Throws Error(support_too_large) when |support| >= n.
Refit refit_support(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                    const std::vector<int>& support);

/// Largest subgradient-stationarity residual of the fit, measured on the
/// standardized scale: for j outside the support max(|g_j| - lambda pf_j, 0),
/// inside |g_j + lambda pf_j sign(b_j)|, and |g_0| for the intercept, where g
/// is the gradient of the unpenalized loss.
double kkt_check(const LassoFit& fit, const Matrix& L, const Vector& y, const Vector& obs_weights,
                 Link link, const LassoOptions& options = {});

/// Penalized objective of the fit as defined at the top of this header.
double penalized_objective(const LassoFit& fit, const Matrix& L, const Vector& y,
                           const Vector& obs_weights, Link link, const LassoOptions& options = {});

}  // namespace hddr
