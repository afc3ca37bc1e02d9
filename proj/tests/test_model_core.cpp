#include "hddr/model_core.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

using namespace hddr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Dataset small_dataset() {
  Dataset d;
  d.y = Vector{{0.3, -1.2, 2.5, 0.0}};
  d.a = Vector{{0.0, 1.0, 1.0, 0.0}};
  d.L = Matrix{{1.0, 2.0}, {0.5, -1.0}, {-2.0, 0.0}, {3.0, 1.5}};
  return d;
}

}  // namespace

TEST_CASE("expit reference values") {
  CHECK(expit(0.0) == 0.5);
  // 50-digit evaluation of 1/(1+e^{-2}) is 0.88079707797788244406; the
  // literal below is its nearest double.
  CHECK_THAT(expit(2.0), WithinAbs(0.8807970779778824, 2.3e-16));
  CHECK_THAT(expit(-2.0), WithinRel(0.11920292202211756, 1e-15));
  CHECK_THAT(expit(-40.0), WithinRel(4.248354255291589e-18, 1e-14));
  CHECK_THAT(expit(-700.0), WithinRel(9.85967654375977e-305, 1e-12));
  CHECK_THAT(expit(40.0), WithinAbs(1.0, 1e-15));
  CHECK(std::isfinite(expit(-745.0)));
  CHECK(std::isfinite(expit(745.0)));
}

TEST_CASE("expit symmetry and monotonicity") {
  double prev = 0.0;
  for (double t = -30.0; t <= 30.0; t += 0.37) {
    CHECK_THAT(expit(t) + expit(-t), WithinAbs(1.0, 2.3e-16));
    CHECK(expit(t) > prev);
    prev = expit(t);
  }
}

TEST_CASE("log1p_exp matches high-precision values") {
  CHECK_THAT(log1p_exp(-30.0), WithinRel(9.357622968839737e-14, 1e-14));
  CHECK_THAT(log1p_exp(0.0), WithinRel(0.6931471805599453, 1e-15));
  CHECK_THAT(log1p_exp(1.0), WithinRel(1.3132616875182228, 1e-15));
  CHECK_THAT(log1p_exp(30.0), WithinRel(30.000000000000092, 1e-15));
  CHECK(log1p_exp(800.0) == 800.0);
  CHECK(log1p_exp(-800.0) >= 0.0);
}

TEST_CASE("logit inverts expit and clipping bounds probabilities") {
  for (double p : {1e-6, 0.1, 0.5, 0.77, 1 - 1e-6}) CHECK_THAT(expit(logit(p)), WithinRel(p, 1e-12));
  CHECK(clip_probability(0.0) == kProbClip);
  CHECK(clip_probability(1.0) == 1.0 - kProbClip);
  CHECK(clip_probability(0.3) == 0.3);
}

TEST_CASE("predict_mean under both links") {
  const Matrix L{{3.0, 7.0}, {-1.0, 2.0}};
  WorkingModel zero = WorkingModel::zeros(Link::identity, 2);
  CHECK(predict_mean(zero, L).isZero());
  zero.link = Link::logit;
  CHECK((predict_mean(zero, L).array() == 0.5).all());

  const WorkingModel m{Link::identity, 1.0, Vector{{2.0, 0.0}}};
  CHECK(predict_mean(m, L)[0] == 7.0);
  CHECK(m.support() == std::vector<int>{0});

  const WorkingModel wrong{Link::identity, 0.0, Vector::Zero(3)};
  CHECK_THROWS_AS(predict_mean(wrong, L), std::invalid_argument);
}

TEST_CASE("logit means stay strictly inside the unit interval") {
  const Matrix L{{1.0}, {-1.0}};
  const WorkingModel m{Link::logit, 0.0, Vector{{1000.0}}};
  const Vector mu = predict_mean(m, L);
  CHECK(mu[0] < 1.0);
  CHECK(mu[1] > 0.0);
  CHECK(mu[1] == kProbClip);
}

TEST_CASE("intercept shift equals a constant column") {
  const Matrix L{{0.2, -1.0}, {1.5, 0.3}, {-0.7, 2.0}};
  const WorkingModel with_intercept{Link::logit, 0.75, Vector{{1.0, -0.5}}};
  Matrix Lc(3, 3);
  Lc << L, Vector::Ones(3);
  const WorkingModel with_column{Link::logit, 0.0, Vector{{1.0, -0.5, 0.75}}};
  const Vector a = predict_mean(with_intercept, L);
  const Vector b = predict_mean(with_column, Lc);
  for (int i = 0; i < 3; ++i) CHECK_THAT(a[i], WithinAbs(b[i], 1e-15));
}

TEST_CASE("validate_dataset accepts valid data") {
  const Dataset d = small_dataset();
  CHECK_NOTHROW(validate_dataset(d, Link::logit, Link::identity));
  CHECK_FALSE(check_dataset(d, Link::logit, Link::identity).has_value());
}

TEST_CASE("validate_dataset reports the first violation with its location") {
  Dataset d = small_dataset();
  d.a = Vector{{0.0, 1.0, 2.0, 1.0}};
  const auto e = check_dataset(d, Link::logit, Link::identity);
  REQUIRE(e.has_value());
  CHECK(e->kind() == ValidationErrorKind::non_binary_exposure);
  CHECK(e->row() == 3);
  // The identity exposure link does not require 0/1.
  CHECK_FALSE(check_dataset(d, Link::identity, Link::identity).has_value());

  d = small_dataset();
  d.y[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_dataset(d, Link::logit, Link::identity), ValidationError);
  CHECK(check_dataset(d, Link::logit, Link::identity)->kind() == ValidationErrorKind::non_finite);
  CHECK(check_dataset(d, Link::logit, Link::identity)->row() == 2);

  d = small_dataset();
  d.L(2, 1) = std::numeric_limits<double>::infinity();
  const auto inf = check_dataset(d, Link::logit, Link::identity);
  CHECK(inf->kind() == ValidationErrorKind::non_finite);
  CHECK(inf->row() == 3);
  CHECK(inf->col() == 2);

  d = small_dataset();
  d.y = Vector::Zero(3);
  CHECK(check_dataset(d, Link::logit, Link::identity)->kind() ==
        ValidationErrorKind::length_mismatch);

  d = small_dataset();
  CHECK(check_dataset(d, Link::logit, Link::logit)->kind() ==
        ValidationErrorKind::non_binary_outcome);
}

TEST_CASE("n below 2 or no covariates is rejected") {
  Dataset d;
  d.y = Vector{{1.0}};
  d.a = Vector{{1.0}};
  d.L = Matrix{{0.5}};
  CHECK(check_dataset(d, Link::logit, Link::identity)->kind() ==
        ValidationErrorKind::length_mismatch);
  d = small_dataset();
  d.L.resize(4, 0);
  CHECK(check_dataset(d, Link::logit, Link::identity).has_value());
}

TEST_CASE("link names round-trip") {
  CHECK(parse_link("identity") == Link::identity);
  CHECK(parse_link(to_string(Link::logit)) == Link::logit);
  CHECK_THROWS_AS(parse_link("probit"), std::invalid_argument);
}
