#pragma once

// Data model and working-model evaluation shared by every other module.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hddr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Probabilities produced by the logit link are clipped to
/// [kProbClip, 1 - kProbClip] before they enter a log or a weight.
inline constexpr double kProbClip = 1e-10;

enum class Link { identity, logit };

std::string to_string(Link link);
Link parse_link(const std::string& name);

/// Outcome Y, exposure A and covariates L for n subjects.
struct Dataset {
  Vector y;
  Vector a;
  Matrix L;
  std::vector<std::string> column_names;  // empty or one per column of L

  Eigen::Index n() const { return L.rows(); }
  Eigen::Index p() const { return L.cols(); }
};

/// A fitted parametric mean model: link^{-1}(intercept + coef' L).
/// The intercept is never penalized.
struct WorkingModel {
  Link link = Link::identity;
  double intercept = 0.0;
  Vector coef;

  static WorkingModel zeros(Link link, Eigen::Index p);

  /// Indices j with coef_j != 0, ascending.
  std::vector<int> support() const;
  Vector linear_predictor(const Matrix& L) const;
};

enum class ValidationErrorKind {
  non_finite,
  length_mismatch,
  non_binary_exposure,
  non_binary_outcome,
};

std::string to_string(ValidationErrorKind kind);

/// Dataset precondition violation. Row and column are 1-based; 0 means
/// "not applicable".
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(ValidationErrorKind kind, std::size_t row, std::size_t col,
                  const std::string& what);

  ValidationErrorKind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  ValidationErrorKind kind_;
  std::size_t row_;
  std::size_t col_;
};

/// Numerically stable logistic function; never overflows for finite t.
double expit(double t);
double logit(double p);
double clip_probability(double p);

/// log(1 + exp(t)) without overflow.
double log1p_exp(double t);

/// Row-wise mean under the model's link. Logit means are clipped, so they
/// lie strictly inside (0, 1). Throws std::invalid_argument when
/// cols(L) != len(coef).
Vector predict_mean(const WorkingModel& model, const Matrix& L);

/// First violated Dataset invariant, or nullopt when the data satisfy every
/// precondition of the downstream operations for the requested links.
std::optional<ValidationError> check_dataset(const Dataset& d, Link exposure_link,
                                             Link outcome_link);

/// Throwing form of check_dataset.
void validate_dataset(const Dataset& d, Link exposure_link, Link outcome_link);

bool is_binary(const Vector& v);

}  // namespace hddr
