#include "hddr/nuisance.hpp"

#include "hddr/errors.hpp"

#include <cmath>
#include <sstream>

namespace hddr {

std::string to_string(NuisanceMethod method) {
  switch (method) {
    case NuisanceMethod::pmle_dr: return "pmle-dr";
    case NuisanceMethod::br_dr: return "br-dr";
    case NuisanceMethod::known_propensity: return "known-propensity";
  }
  return "unknown";
}

Vector NuisanceFit::exposure_mean(const Matrix& L) const {
  if (known_propensity) {
    if (known_propensity->size() != L.rows()) {
      throw std::invalid_argument("known propensity length does not match the data");
    }
    return *known_propensity;
  }
  if (!exposure_model) throw std::logic_error("nuisance fit has no exposure model");
  return predict_mean(*exposure_model, L);
}

Vector NuisanceFit::outcome_mean(const Matrix& L) const { return predict_mean(outcome_model, L); }

BrWeights compute_br_weights(const WorkingModel& model, const Matrix& L) {
  if (model.link != Link::logit) {
    throw Error(Errc::wrong_link, "weights p(1-p) need a logit working model");
  }
  Vector p = predict_mean(model, L);
  return BrWeights{p.array() * (1.0 - p.array())};
}

namespace {

CvLassoFit cv_fit(std::optional<CvLassoFit>* slot, const Matrix& L, const Vector& target,
                  Link link, const NuisanceOptions& options) {
  if (slot && *slot) return **slot;
  LassoOptions lasso;
  lasso.control = options.control;
  CvLassoFit fit =
      fit_lasso_cv(L, target, Vector::Ones(L.rows()), link, options.k_folds, options.seed, lasso);
  if (slot) *slot = fit;
  return fit;
}

std::optional<CvLassoFit>* slot_for(SharedFits* shared, Link outcome_link) {
  if (!shared) return nullptr;
  return outcome_link == Link::identity ? &shared->outcome_identity : &shared->outcome_logit;
}

CvLassoFit weighted_cv_fit(const Matrix& L, const Vector& target, const Vector& w, Link link,
                           const NuisanceOptions& options) {
  LassoOptions lasso;
  lasso.control = options.control;
  return fit_lasso_cv(L, target, w, link, options.k_folds, options.seed, lasso);
}

double logistic_term(double y, double eta) { return log1p_exp(eta) - y * eta; }

}  // namespace

NuisanceFit estimate_pmle_dr(const Dataset& d, Link outcome_link, const NuisanceOptions& options,
                             SharedFits* shared) {
  validate_dataset(d, Link::logit, outcome_link);
  const Vector ones = Vector::Ones(d.n());

  NuisanceFit fit;
  fit.method = NuisanceMethod::pmle_dr;
  {
    const CvLassoFit ex = cv_fit(shared ? &shared->exposure : nullptr, d.L, d.a, Link::logit,
                                  options);
    Refit refit = refit_support(d.L, d.a, ones, Link::logit, ex.fit.model.support());
    fit.exposure_penalized = ex.fit.model;
    fit.exposure_model = std::move(refit.model);
    fit.dropped_exposure = std::move(refit.dropped);
    fit.lambda_gamma = ex.fit.lambda;
    fit.converged = ex.fit.converged && refit.converged;
  }
  {
    const CvLassoFit out = cv_fit(slot_for(shared, outcome_link), d.L, d.y, outcome_link, options);
    Refit refit = refit_support(d.L, d.y, ones, outcome_link, out.fit.model.support());
    fit.outcome_penalized = out.fit.model;
    fit.outcome_model = std::move(refit.model);
    fit.dropped_outcome = std::move(refit.dropped);
    fit.lambda_beta = out.fit.lambda;
    fit.converged = fit.converged && out.fit.converged && refit.converged;
  }
  return fit;
}

NuisanceFit estimate_br_dr_continuous(const Dataset& d, const NuisanceOptions& options,
                                      SharedFits* shared) {
  validate_dataset(d, Link::logit, Link::identity);
  const Vector ones = Vector::Ones(d.n());

  NuisanceFit fit;
  fit.method = NuisanceMethod::br_dr;

  const CvLassoFit ex = cv_fit(shared ? &shared->exposure : nullptr, d.L, d.a, Link::logit,
                                options);
  Refit ex_refit = refit_support(d.L, d.a, ones, Link::logit, ex.fit.model.support());
  fit.exposure_penalized = ex.fit.model;
  fit.lambda_gamma = ex.fit.lambda;
  const bool exposure_ok = ex.fit.converged && ex_refit.converged;

  // Outcome: weighted Lasso with weights from the penalized exposure fit; the
  // refit keeps the same weights.
  const Vector w = compute_br_weights(ex.fit.model, d.L).w;
  const CvLassoFit out = weighted_cv_fit(d.L, d.y, w, Link::identity, options);
  Refit out_refit = refit_support(d.L, d.y, w, Link::identity, out.fit.model.support());

  fit.exposure_model = std::move(ex_refit.model);
  fit.dropped_exposure = std::move(ex_refit.dropped);
  fit.outcome_penalized = out.fit.model;
  fit.outcome_model = std::move(out_refit.model);
  fit.dropped_outcome = std::move(out_refit.dropped);
  fit.lambda_beta = out.fit.lambda;
  fit.converged = exposure_ok && out.fit.converged && out_refit.converged;
  return fit;
}

NuisanceFit estimate_br_dr_binary(const Dataset& d, const NuisanceOptions& options,
                                  SharedFits* shared) {
  validate_dataset(d, Link::logit, Link::logit);
  if (options.max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  const Eigen::Index n = d.n();
  const Vector ones = Vector::Ones(n);

  // Step 1: unweighted penalized fits and their refits.
  const CvLassoFit ex0 = cv_fit(shared ? &shared->exposure : nullptr, d.L, d.a, Link::logit,
                                options);
  const CvLassoFit out0 = cv_fit(slot_for(shared, Link::logit), d.L, d.y, Link::logit, options);
  bool solvers_ok = ex0.fit.converged && out0.fit.converged;

  WorkingModel ex_pen = ex0.fit.model;
  WorkingModel out_pen = out0.fit.model;
  Refit ex_ref = refit_support(d.L, d.a, ones, Link::logit, ex_pen.support());
  Refit out_ref = refit_support(d.L, d.y, ones, Link::logit, out_pen.support());
  solvers_ok = solvers_ok && ex_ref.converged && out_ref.converged;

  // Step 2: initial objective on the refitted estimates.
  std::vector<double> trace;
  {
    const Vector eta_g = ex_ref.model.linear_predictor(d.L);
    const Vector eta_b = out_ref.model.linear_predictor(d.L);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += logistic_term(d.a[i], eta_g[i]) + logistic_term(d.y[i], eta_b[i]);
    }
    trace.push_back(total / static_cast<double>(n));
  }

  // Step 3: alternate weighted fits. Penalties are chosen by cross-validation
  // at the first iteration and held fixed afterwards.
  double lambda_gamma = 0.0;
  double lambda_beta = 0.0;
  bool terminated = false;
  int j = 0;
  LassoOptions lasso;
  lasso.control = options.control;
  while (j < options.max_outer) {
    ++j;
    const Vector w_gamma = compute_br_weights(out_pen, d.L).w;
    const Vector w_beta = compute_br_weights(ex_pen, d.L).w;
    LassoFit ex_fit, out_fit;
    if (j == 1) {
      CvLassoFit cv_g = weighted_cv_fit(d.L, d.a, w_gamma, Link::logit, options);
      CvLassoFit cv_b = weighted_cv_fit(d.L, d.y, w_beta, Link::logit, options);
      lambda_gamma = cv_g.fit.lambda;
      lambda_beta = cv_b.fit.lambda;
      ex_fit = std::move(cv_g.fit);
      out_fit = std::move(cv_b.fit);
    } else {
      ex_fit = fit_lasso_logistic(d.L, d.a, w_gamma, lambda_gamma, lasso);
      out_fit = fit_lasso_logistic(d.L, d.y, w_beta, lambda_beta, lasso);
    }
    solvers_ok = solvers_ok && ex_fit.converged && out_fit.converged;

    const Vector w_gamma_ref = compute_br_weights(out_ref.model, d.L).w;
    const Vector w_beta_ref = compute_br_weights(ex_ref.model, d.L).w;
    Refit ex_ref_new = refit_support(d.L, d.a, w_gamma_ref, Link::logit, ex_fit.model.support());
    Refit out_ref_new = refit_support(d.L, d.y, w_beta_ref, Link::logit, out_fit.model.support());
    solvers_ok = solvers_ok && ex_ref_new.converged && out_ref_new.converged;

    const Vector eta_g = ex_ref_new.model.linear_predictor(d.L);
    const Vector eta_b = out_ref_new.model.linear_predictor(d.L);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += logistic_term(d.a[i], eta_g[i]) * w_gamma_ref[i] +
               logistic_term(d.y[i], eta_b[i]) * w_beta_ref[i];
    }
    trace.push_back(total / static_cast<double>(n));

    ex_pen = std::move(ex_fit.model);
    out_pen = std::move(out_fit.model);
    ex_ref = std::move(ex_ref_new);
    out_ref = std::move(out_ref_new);

    const std::size_t m = trace.size();
    if (std::abs(trace[m - 1] - trace[m - 2]) < options.outer_tolerance) {
      terminated = true;
      break;
    }
  }

  NuisanceFit fit;
  fit.method = NuisanceMethod::br_dr;
  fit.exposure_penalized = std::move(ex_pen);
  fit.outcome_penalized = std::move(out_pen);
  fit.exposure_model = std::move(ex_ref.model);
  fit.outcome_model = std::move(out_ref.model);
  fit.dropped_exposure = std::move(ex_ref.dropped);
  fit.dropped_outcome = std::move(out_ref.dropped);
  fit.lambda_gamma = lambda_gamma;
  fit.lambda_beta = lambda_beta;
  fit.algorithm1_trace = std::move(trace);
  fit.outer_iterations = j;
  fit.converged = terminated && solvers_ok;
  return fit;
}

NuisanceFit estimate_br_dr(const Dataset& d, Link outcome_link, const NuisanceOptions& options,
                           SharedFits* shared) {
  return outcome_link == Link::identity ? estimate_br_dr_continuous(d, options, shared)
                                        : estimate_br_dr_binary(d, options, shared);
}

NuisanceFit known_propensity_fit(const Dataset& d, const Vector& pi_star, Link outcome_link,
                                 const NuisanceOptions& options, SharedFits* shared) {
  validate_dataset(d, Link::logit, outcome_link);
  if (pi_star.size() != d.n()) {
    throw std::invalid_argument("pi_star must have one probability per observation");
  }
  for (Eigen::Index i = 0; i < pi_star.size(); ++i) {
    if (!(pi_star[i] > 0.0 && pi_star[i] < 1.0)) {
      std::ostringstream msg;
      msg << "pi_star[" << i + 1 << "] = " << pi_star[i] << " is not in (0, 1)";
      throw Error(Errc::invalid_probability, msg.str());
    }
  }
  const CvLassoFit out = cv_fit(slot_for(shared, outcome_link), d.L, d.y, outcome_link, options);
  Refit refit = refit_support(d.L, d.y, Vector::Ones(d.n()), outcome_link,
                              out.fit.model.support());

  NuisanceFit fit;
  fit.method = NuisanceMethod::known_propensity;
  fit.known_propensity = pi_star;
  fit.outcome_penalized = out.fit.model;
  fit.outcome_model = std::move(refit.model);
  fit.dropped_outcome = std::move(refit.dropped);
  fit.lambda_beta = out.fit.lambda;
  fit.converged = out.fit.converged && refit.converged;
  return fit;
}

NuisanceFit known_propensity_fit(const Dataset& d, const Vector& gamma_star, double intercept,
                                 Link outcome_link, const NuisanceOptions& options,
                                 SharedFits* shared) {
  if (gamma_star.size() != d.p()) {
    throw std::invalid_argument("gamma_star must have one coefficient per covariate");
  }
  const WorkingModel model{Link::logit, intercept, gamma_star};
  return known_propensity_fit(d, predict_mean(model, d.L), outcome_link, options, shared);
}

}  // namespace hddr
