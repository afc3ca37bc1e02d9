#include "hddr/comparators.hpp"

#include "hddr/errors.hpp"
#include "hddr/penalized_glm.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hddr {

std::string to_string(ComparatorKind kind) {
  switch (kind) {
    case ComparatorKind::naive_forced: return "naive-forced";
    case ComparatorKind::naive_unforced: return "naive-unforced";
    case ComparatorKind::pds_cv: return "pds-cv";
  }
  return "unknown";
}

double two_sided_t_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t reference needs positive degrees of freedom");
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

namespace {

// OLS of y on [1, a, L_cols]. Covariate columns that are linearly dependent on
// the intercept, the exposure and lower-indexed kept columns are dropped.
struct ExposureOls {
  Matrix X;  // [1, a, kept columns]
  Vector coef;
  Vector resid;
  Matrix xtx_inv;
  std::vector<int> kept;
  std::vector<int> dropped;
};

ExposureOls exposure_ols(const Dataset& d, const std::vector<int>& cols) {
  const Eigen::Index n = d.n();
  auto design = [&](const std::vector<int>& c) {
    Matrix X(n, static_cast<Eigen::Index>(c.size()) + 2);
    X.col(0).setOnes();
    X.col(1) = d.a;
    for (std::size_t k = 0; k < c.size(); ++k) X.col(static_cast<Eigen::Index>(k) + 2) = d.L.col(c[k]);
    return X;
  };
  ExposureOls out;
  out.X = design(cols);
  if (Eigen::ColPivHouseholderQR<Matrix>(out.X).rank() == out.X.cols()) {
    out.kept = cols;
  } else {
    if (Eigen::ColPivHouseholderQR<Matrix>(design({})).rank() < 2) {
      throw Error(Errc::zero_variance, "exposure is constant; its coefficient is not identified");
    }
    for (const int j : cols) {
      std::vector<int> trial = out.kept;
      trial.push_back(j);
      const Matrix X = design(trial);
      if (Eigen::ColPivHouseholderQR<Matrix>(X).rank() == X.cols()) {
        out.kept = std::move(trial);
      } else {
        out.dropped.push_back(j);
      }
    }
    out.X = design(out.kept);
  }
  const Matrix xtx = out.X.transpose() * out.X;
  out.xtx_inv = xtx.ldlt().solve(Matrix::Identity(xtx.rows(), xtx.cols()));
  out.coef = out.X.colPivHouseholderQr().solve(d.y);
  out.resid = d.y - out.X * out.coef;
  return out;
}

TestResult wald_result(std::string method, Eigen::Index n, double coef, double se, double t,
                       double p) {
  TestResult r;
  r.method = std::move(method);
  r.n = n;
  r.t_n = t;
  r.p_value = p;
  r.score_mean = coef;
  r.score_sd = std::sqrt(static_cast<double>(n)) * se;
  r.diagnostics["coef_a"] = coef;
  r.diagnostics["se_a"] = se;
  return r;
}

}  // namespace

TestResult naive_post_selection_test(const Dataset& d, bool forced, int k_folds,
                                     std::uint64_t seed) {
  validate_dataset(d, Link::identity, Link::identity);
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();

  Matrix X(n, p + 1);
  X.col(0) = d.a;
  X.rightCols(p) = d.L;
  LassoOptions options;
  options.penalty_factors = Vector::Ones(p + 1);
  if (forced) options.penalty_factors[0] = 0.0;
  const CvLassoFit cv = fit_lasso_cv(X, d.y, Vector::Ones(n), Link::identity, k_folds, seed, options);

  std::vector<int> selected;
  for (Eigen::Index j = 1; j <= p; ++j) {
    if (cv.fit.model.coef[j] != 0.0) selected.push_back(static_cast<int>(j - 1));
  }
  if (static_cast<Eigen::Index>(selected.size()) + 2 >= n) {
    std::ostringstream msg;
    msg << selected.size() << " selected covariates leave no residual degrees of freedom";
    throw Error(Errc::support_too_large, msg.str());
  }
  const ExposureOls ols = exposure_ols(d, selected);
  const auto k = static_cast<double>(ols.X.cols());
  const double df = static_cast<double>(n) - k;
  const double sigma2 = ols.resid.squaredNorm() / df;
  const double se = std::sqrt(sigma2 * ols.xtx_inv(1, 1));
  const double t = ols.coef[1] / se;

  TestResult r = wald_result(forced ? "naive-forced" : "naive-unforced", n, ols.coef[1], se, t,
                             two_sided_t_p(t, df));
  r.diagnostics["lambda"] = cv.fit.lambda;
  r.diagnostics["selected_covariates"] = static_cast<double>(ols.kept.size());
  r.diagnostics["exposure_selected"] = cv.fit.model.coef[0] != 0.0 ? 1.0 : 0.0;
  r.diagnostics["df"] = df;
  r.diagnostics["dropped_columns"] = static_cast<double>(ols.dropped.size());
  r.diagnostics["converged"] = cv.fit.converged ? 1.0 : 0.0;
  return r;
}

TestResult pds_cv_test(const Dataset& d, int k_folds, std::uint64_t seed, SharedFits* shared) {
  validate_dataset(d, Link::logit, Link::identity);
  const Eigen::Index n = d.n();
  const Vector ones = Vector::Ones(n);

  auto cached = [&](std::optional<CvLassoFit>* slot, const Vector& target, Link link) {
    if (slot && *slot) return **slot;
    CvLassoFit fit = fit_lasso_cv(d.L, target, ones, link, k_folds, seed);
    if (slot) *slot = fit;
    return fit;
  };
  const CvLassoFit out = cached(shared ? &shared->outcome_identity : nullptr, d.y, Link::identity);
  const CvLassoFit ex = cached(shared ? &shared->exposure : nullptr, d.a, Link::logit);

  const std::vector<int> s_beta = out.fit.model.support();
  const std::vector<int> s_gamma = ex.fit.model.support();
  std::vector<int> joint;
  std::set_union(s_beta.begin(), s_beta.end(), s_gamma.begin(), s_gamma.end(),
                 std::back_inserter(joint));
  if (static_cast<Eigen::Index>(joint.size()) >= n - 2) {
    std::ostringstream msg;
    msg << "union of " << joint.size() << " selected covariates with n = " << n;
    throw Error(Errc::union_too_large, msg.str());
  }

  const ExposureOls ols = exposure_ols(d, joint);
  const Eigen::Index k = ols.X.cols();
  const Matrix meat = ols.X.transpose() * (ols.X.array().colwise() * ols.resid.array().square()).matrix();
  const Matrix sandwich = ols.xtx_inv * meat * ols.xtx_inv;
  const double hc1 = static_cast<double>(n) / static_cast<double>(n - k);
  const double se = std::sqrt(hc1 * sandwich(1, 1));
  const double t = ols.coef[1] / se;
  const double sigma2 = ols.resid.squaredNorm() / static_cast<double>(n - k);

  TestResult r = wald_result("pds-cv", n, ols.coef[1], se, t, two_sided_normal_p(t));
  r.diagnostics["se_classical"] = std::sqrt(sigma2 * ols.xtx_inv(1, 1));
  r.diagnostics["outcome_support_size"] = static_cast<double>(s_beta.size());
  r.diagnostics["exposure_support_size"] = static_cast<double>(s_gamma.size());
  r.diagnostics["union_size"] = static_cast<double>(joint.size());
  r.diagnostics["lambda_beta"] = out.fit.lambda;
  r.diagnostics["lambda_gamma"] = ex.fit.lambda;
  r.diagnostics["dropped_columns"] = static_cast<double>(ols.dropped.size());
  r.diagnostics["converged"] = (out.fit.converged && ex.fit.converged) ? 1.0 : 0.0;
  return r;
}

TestResult run_comparator(const Dataset& d, const ComparatorSpec& spec, SharedFits* shared) {
  switch (spec.kind) {
    case ComparatorKind::naive_forced:
      return naive_post_selection_test(d, true, spec.k_folds, spec.seed);
    case ComparatorKind::naive_unforced:
      return naive_post_selection_test(d, false, spec.k_folds, spec.seed);
    case ComparatorKind::pds_cv:
      return pds_cv_test(d, spec.k_folds, spec.seed, shared);
  }
  throw std::invalid_argument("unknown comparator");
}

}  // namespace hddr
