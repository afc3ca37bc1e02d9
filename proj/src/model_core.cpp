#include "hddr/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hddr {

std::string to_string(Link link) {
  return link == Link::identity ? "identity" : "logit";
}

Link parse_link(const std::string& name) {
  if (name == "identity") return Link::identity;
  if (name == "logit") return Link::logit;
  throw std::invalid_argument("unknown link '" + name + "' (expected identity or logit)");
}

WorkingModel WorkingModel::zeros(Link link, Eigen::Index p) {
  return WorkingModel{link, 0.0, Vector::Zero(p)};
}

std::vector<int> WorkingModel::support() const {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (coef[j] != 0.0) s.push_back(static_cast<int>(j));
  }
  return s;
}

Vector WorkingModel::linear_predictor(const Matrix& L) const {
  if (L.cols() != coef.size()) {
    std::ostringstream msg;
    msg << "dimension mismatch: model has " << coef.size() << " coefficients, matrix has "
        << L.cols() << " columns";
    throw std::invalid_argument(msg.str());
  }
  Vector eta = L * coef;
  eta.array() += intercept;
  return eta;
}

std::string to_string(ValidationErrorKind kind) {
  switch (kind) {
    case ValidationErrorKind::non_finite: return "NonFinite";
    case ValidationErrorKind::length_mismatch: return "LengthMismatch";
    case ValidationErrorKind::non_binary_exposure: return "NonBinaryExposure";
    case ValidationErrorKind::non_binary_outcome: return "NonBinaryOutcome";
  }
  return "Unknown";
}

ValidationError::ValidationError(ValidationErrorKind kind, std::size_t row, std::size_t col,
                                 const std::string& what)
    : std::invalid_argument(to_string(kind) + ": " + what), kind_(kind), row_(row), col_(col) {}

double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double clip_probability(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

double log1p_exp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

Vector predict_mean(const WorkingModel& model, const Matrix& L) {
  Vector eta = model.linear_predictor(L);
  if (model.link == Link::logit) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = clip_probability(expit(eta[i]));
  }
  return eta;
}

bool is_binary(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

namespace {

std::optional<ValidationError> first_non_finite(const Vector& v, const char* name,
                                                std::size_t col) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream msg;
      msg << name << " is not finite at row " << i + 1;
      return ValidationError(ValidationErrorKind::non_finite, static_cast<std::size_t>(i) + 1,
                             col, msg.str());
    }
  }
  return std::nullopt;
}

std::optional<ValidationError> first_non_binary(const Vector& v, ValidationErrorKind kind,
                                                const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) {
      std::ostringstream msg;
      msg << name << " must be 0/1 for the logit link; row " << i + 1 << " has " << v[i];
      return ValidationError(kind, static_cast<std::size_t>(i) + 1, 0, msg.str());
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<ValidationError> check_dataset(const Dataset& d, Link exposure_link,
                                             Link outcome_link) {
  const auto n = d.L.rows();
  if (d.y.size() != n || d.a.size() != n) {
    std::ostringstream msg;
    msg << "len(y)=" << d.y.size() << ", len(a)=" << d.a.size() << ", rows(L)=" << n;
    return ValidationError(ValidationErrorKind::length_mismatch, 0, 0, msg.str());
  }
  if (n < 2 || d.L.cols() < 1) {
    std::ostringstream msg;
    msg << "need n >= 2 and p >= 1, got n=" << n << ", p=" << d.L.cols();
    return ValidationError(ValidationErrorKind::length_mismatch, 0, 0, msg.str());
  }
  if (!d.column_names.empty() && static_cast<Eigen::Index>(d.column_names.size()) != d.L.cols()) {
    return ValidationError(ValidationErrorKind::length_mismatch, 0, 0,
                           "column_names must have one entry per covariate");
  }
  if (auto e = first_non_finite(d.y, "y", 0)) return e;
  if (auto e = first_non_finite(d.a, "a", 0)) return e;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d.L.cols(); ++j) {
      if (!std::isfinite(d.L(i, j))) {
        std::ostringstream msg;
        msg << "L is not finite at row " << i + 1 << ", column " << j + 1;
        return ValidationError(ValidationErrorKind::non_finite, static_cast<std::size_t>(i) + 1,
                               static_cast<std::size_t>(j) + 1, msg.str());
      }
    }
  }
  if (exposure_link == Link::logit) {
    if (auto e = first_non_binary(d.a, ValidationErrorKind::non_binary_exposure, "exposure")) {
      return e;
    }
  }
  if (outcome_link == Link::logit) {
    if (auto e = first_non_binary(d.y, ValidationErrorKind::non_binary_outcome, "outcome")) {
      return e;
    }
  }
  return std::nullopt;
}

void validate_dataset(const Dataset& d, Link exposure_link, Link outcome_link) {
  if (auto e = check_dataset(d, exposure_link, outcome_link)) throw *e;
}

}  // namespace hddr
