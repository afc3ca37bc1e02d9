#pragma once

// Baseline tests of the exposure effect that the doubly robust score is
// compared against: naive post-selection t-tests and post-double selection,
// all with cross-validated penalties.

#include "hddr/nuisance.hpp"
#include "hddr/score_test.hpp"

#include <cstdint>
#include <string>

namespace hddr {

enum class ComparatorKind { naive_forced, naive_unforced, pds_cv };

std::string to_string(ComparatorKind kind);

struct ComparatorSpec {
  ComparatorKind kind = ComparatorKind::pds_cv;
  int k_folds = 10;
  std::uint64_t seed = 1;
};

/// Two-sided p-value of a t statistic with df degrees of freedom.
double two_sided_t_p(double t, double df);

/// Lasso of Y on (A, L) with a cross-validated penalty (A unpenalized when
/// forced), OLS refit of Y on A plus the selected covariates, classical
/// t-test on A. A stays in the refit even when the Lasso dropped it.
TestResult naive_post_selection_test(const Dataset& d, bool forced, int k_folds,
                                     std::uint64_t seed);

/// Union of the covariates selected by a cross-validated linear Lasso of Y on
/// L and a cross-validated logistic Lasso of A on L; OLS of Y on A plus the
/// union with an HC1 sandwich standard error and a normal reference.
/// Throws Error(union_too_large) when the union has n - 2 or more columns.
TestResult pds_cv_test(const Dataset& d, int k_folds, std::uint64_t seed,
                       SharedFits* shared = nullptr);

TestResult run_comparator(const Dataset& d, const ComparatorSpec& spec,
                          SharedFits* shared = nullptr);

}  // namespace hddr
