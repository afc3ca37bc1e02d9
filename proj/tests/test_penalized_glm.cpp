#include "hddr/errors.hpp"
#include "hddr/penalized_glm.hpp"
#include "hddr/rng.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace hddr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix gaussian_matrix(std::uint64_t seed, int n, int p) {
  PhiloxStream rng(seed, 0);
  Matrix L(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) L(i, j) = rng.normal();
  return L;
}

// Direct evaluation of max_j |n^{-1} sum_i w_i z_ij (y_i - ybar_w)| with z the
// weighted-standardized columns.
double lambda_max_direct(const Matrix& L, const Vector& y, const Vector& w) {
  const double sw = w.sum();
  const double n = static_cast<double>(L.rows());
  const double ybar = w.dot(y) / sw;
  double best = 0.0;
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    const double mean = w.dot(L.col(j)) / sw;
    const Eigen::ArrayXd c = L.col(j).array() - mean;
    const double sd = std::sqrt((w.array() * c.square()).sum() / sw);
    const double score = (w.array() * c / sd * (y.array() - ybar)).sum() / n;
    best = std::max(best, std::abs(score));
  }
  return best;
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-2.5, 0.25) == -2.25);
  CHECK(soft_threshold(0.7, 0.0) == 0.7);
}

TEST_CASE("unpenalized linear fit interpolates two points") {
  const Matrix L{{1.0}, {-1.0}};
  const Vector y{{1.0, -1.0}};
  const LassoFit fit = fit_lasso_linear(L, y, Vector::Ones(2), 0.0);
  CHECK(fit.converged);
  CHECK_THAT(fit.model.coef[0], WithinAbs(1.0, 1e-9));
  CHECK_THAT(fit.model.intercept, WithinAbs(0.0, 1e-9));
}

TEST_CASE("lambda_max matches the marginal score and zeroes the fit") {
  const Matrix L = gaussian_matrix(1, 60, 8);
  PhiloxStream rng(2, 0);
  Vector y(60), w(60), yb(60);
  for (int i = 0; i < 60; ++i) {
    y[i] = L(i, 0) - 0.5 * L(i, 3) + rng.normal();
    w[i] = 0.5 + rng.uniform();
    yb[i] = rng.uniform() < expit(L(i, 1)) ? 1.0 : 0.0;
  }
  const double top = lambda_max(L, y, w, Link::identity);
  CHECK_THAT(top, WithinRel(lambda_max_direct(L, y, w), 1e-12));
  CHECK_THAT(lambda_max(L, yb, w, Link::logit), WithinRel(lambda_max_direct(L, yb, w), 1e-12));

  for (Link link : {Link::identity, Link::logit}) {
    const Vector& target = link == Link::identity ? y : yb;
    const double lm = lambda_max(L, target, w, link);
    CHECK(fit_lasso(L, target, w, link, lm).model.support().empty());
    CHECK(fit_lasso(L, target, w, link, 2.0 * lm).model.support().empty());
    CHECK_FALSE(fit_lasso(L, target, w, link, 0.9 * lm).model.support().empty());
  }
}

TEST_CASE("lambda grid for the sparse confounding design") {
  // n = 200, p = 200 with standard normal covariates and a sparse linear mean.
  const Matrix L = gaussian_matrix(1, 200, 200);
  PhiloxStream rng(1, 2);
  Vector y(200);
  for (int i = 0; i < 200; ++i) y[i] = 1.0 + 0.4 * L(i, 0) - 0.3 * L(i, 5) + rng.normal();
  const Vector ones = Vector::Ones(200);
  const Vector grid = default_lambda_grid(L, y, ones, Link::identity);
  REQUIRE(grid.size() == 100);
  CHECK_THAT(grid[0], WithinRel(lambda_max_direct(L, y, ones), 1e-12));
  CHECK_THAT(grid[99], WithinRel(0.01 * grid[0], 1e-12));
  CHECK(fit_lasso_linear(L, y, ones, grid[0]).model.support().empty());
}

TEST_CASE("make_lambda_grid spacing and degenerate response") {
  const Matrix L = gaussian_matrix(3, 30, 4);
  Vector y = L.col(0) + Vector::Constant(30, 0.2);
  const Vector ones = Vector::Ones(30);
  const Vector g = make_lambda_grid(L, y, ones, Link::identity, 3, 0.01);
  REQUIRE(g.size() == 3);
  CHECK_THAT(g[1] / g[0], WithinRel(0.1, 1e-12));
  CHECK_THAT(g[2] / g[0], WithinRel(0.01, 1e-12));
  CHECK(default_lambda_grid(L, y, ones, Link::identity).size() == 100);
  CHECK_THAT(default_lambda_grid(L, y, ones, Link::identity)[99],
             WithinRel(1e-4 * g[0], 1e-12));

  const Vector flat = Vector::Constant(30, 2.5);
  const Vector single = make_lambda_grid(L, flat, ones, Link::identity, 100, 0.01);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 0.0);
  CHECK_THROWS_AS(make_lambda_grid(L, y, ones, Link::identity, 1, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(make_lambda_grid(L, y, ones, Link::identity, 10, 1.0), std::invalid_argument);
}

TEST_CASE("coordinate descent agrees with the proximal-gradient oracle") {
  SECTION("p = 3, n = 20 linear at lambda = 0.1") {
    const auto inst = oracle::random_instance(20, 20, 3, Link::identity, true);
    const LassoFit fit = fit_lasso_linear(inst.L, inst.y, inst.w, 0.1);
    const auto ref = oracle::proximal_gradient(inst.L, inst.y, inst.w, Link::identity, 0.1);
    CHECK(fit.converged);
    CHECK_THAT(fit.model.intercept, WithinAbs(ref.intercept, 1e-6));
    for (int j = 0; j < 3; ++j) CHECK_THAT(fit.model.coef[j], WithinAbs(ref.coef[j], 1e-6));
  }
  SECTION("p = 3, n = 50 logistic at lambda = 0.05") {
    const auto inst = oracle::random_instance(50, 50, 3, Link::logit, true);
    const LassoFit fit = fit_lasso_logistic(inst.L, inst.y, inst.w, 0.05);
    const auto ref = oracle::proximal_gradient(inst.L, inst.y, inst.w, Link::logit, 0.05);
    CHECK(fit.converged);
    CHECK_THAT(fit.model.intercept, WithinAbs(ref.intercept, 1e-5));
    for (int j = 0; j < 3; ++j) CHECK_THAT(fit.model.coef[j], WithinAbs(ref.coef[j], 1e-5));
  }
  SECTION("weighted, with an unpenalized column") {
    const auto inst = oracle::random_instance(7, 40, 4, Link::identity, false);
    LassoOptions opt;
    opt.penalty_factors = Vector{{0.0, 1.0, 1.0, 2.0}};
    const double lam = 0.3 * lambda_max(inst.L, inst.y, inst.w, Link::identity, opt);
    const LassoFit fit = fit_lasso_linear(inst.L, inst.y, inst.w, lam, opt);
    const auto ref = oracle::proximal_gradient(inst.L, inst.y, inst.w, Link::identity, lam,
                                               opt.penalty_factors);
    for (int j = 0; j < 4; ++j) CHECK_THAT(fit.model.coef[j], WithinAbs(ref.coef[j], 1e-6));
    CHECK(fit.model.coef[0] != 0.0);
    CHECK(kkt_check(fit, inst.L, inst.y, inst.w, Link::identity, opt) <= 1e-6);
  }
}

TEST_CASE("kkt_check on exact and null solutions") {
  const auto inst = oracle::random_instance(4, 30, 3, Link::identity, false);
  Matrix X(30, 4);
  X.col(0).setOnes();
  X.rightCols(3) = inst.L;
  const Vector theta = oracle::normal_equations(X, inst.y, inst.w);
  LassoFit exact;
  exact.lambda = 0.0;
  exact.model = WorkingModel{Link::identity, theta[0], theta.tail(3)};
  CHECK(kkt_check(exact, inst.L, inst.y, inst.w, Link::identity) <= 1e-8);

  const double top = lambda_max(inst.L, inst.y, inst.w, Link::identity);
  const LassoFit null_fit = fit_lasso_linear(inst.L, inst.y, inst.w, top * 1.5);
  CHECK(kkt_check(null_fit, inst.L, inst.y, inst.w, Link::identity) <= 1e-12);
}

TEST_CASE("converged fits satisfy the KKT conditions") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    for (Link link : {Link::identity, Link::logit}) {
      const auto inst = oracle::random_instance(seed, 45, 5, link, seed % 2 == 0);
      const double top = lambda_max(inst.L, inst.y, inst.w, link);
      for (double frac : {0.5, 0.1, 0.01}) {
        const LassoFit fit = fit_lasso(inst.L, inst.y, inst.w, link, frac * top);
        REQUIRE(fit.converged);
        CHECK(fit.kkt_violation <= 1e-6);
        CHECK(kkt_check(fit, inst.L, inst.y, inst.w, link) <= 1e-6);
      }
    }
  }
}

TEST_CASE("scaling weights and lambda together leaves the fit unchanged") {
  const auto inst = oracle::random_instance(31, 50, 5, Link::identity, false);
  const double lam = 0.2 * lambda_max(inst.L, inst.y, inst.w, Link::identity);
  const LassoFit a = fit_lasso_linear(inst.L, inst.y, inst.w, lam);
  for (double c : {0.25, 3.0, 40.0}) {
    const LassoFit b = fit_lasso_linear(inst.L, inst.y, c * inst.w, c * lam);
    for (int j = 0; j < 5; ++j) CHECK_THAT(b.model.coef[j], WithinAbs(a.model.coef[j], 1e-8));
  }
}

TEST_CASE("path: empty support at the top, objective non-increasing") {
  for (Link link : {Link::identity, Link::logit}) {
    const auto inst = oracle::random_instance(9, 80, 10, link, false);
    const Vector grid = default_lambda_grid(inst.L, inst.y, inst.w, link);
    const auto path = fit_lasso_path(inst.L, inst.y, inst.w, link, grid);
    REQUIRE(path.size() == static_cast<std::size_t>(grid.size()));
    CHECK(path.front().model.support().empty());
    double prev = penalized_objective(path.front(), inst.L, inst.y, inst.w, link);
    for (std::size_t k = 1; k < path.size(); ++k) {
      const double obj = penalized_objective(path[k], inst.L, inst.y, inst.w, link);
      CHECK(obj <= prev + 1e-9);
      prev = obj;
    }
  }
  const auto inst = oracle::random_instance(9, 30, 3, Link::identity, true);
  CHECK_THROWS_AS(fit_lasso_path(inst.L, inst.y, inst.w, Link::identity, Vector{{0.1, 0.2}}),
                  std::invalid_argument);
}

TEST_CASE("logistic fit of an all-zero response") {
  const Matrix L = gaussian_matrix(5, 25, 3);
  const Vector y = Vector::Zero(25);
  const LassoFit fit = fit_lasso_logistic(L, y, Vector::Ones(25), 1.0);
  CHECK(fit.model.support().empty());
  CHECK(fit.model.intercept < -20.0);
  CHECK((predict_mean(fit.model, L).array() <= 1e-10).all());
}

TEST_CASE("constant columns are reported and left at zero") {
  Matrix L = gaussian_matrix(6, 30, 3);
  L.col(1).setConstant(4.0);
  const Vector y = L.col(0) * 2.0 + L.col(2);
  const LassoFit fit = fit_lasso_linear(L, y, Vector::Ones(30), 0.01);
  CHECK(fit.degenerate_columns == std::vector<int>{1});
  CHECK(fit.model.coef[1] == 0.0);
  CHECK(fit.converged);
}

TEST_CASE("fold assignment") {
  const auto folds = assign_folds(23, 5, 42);
  std::vector<int> sizes(5, 0);
  for (int f : folds) ++sizes[static_cast<std::size_t>(f)];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <=
        1);
  CHECK(assign_folds(23, 5, 42) == folds);
  CHECK(assign_folds(23, 5, 43) != folds);
}

TEST_CASE("argmin ties go to the larger lambda") {
  CHECK(argmin_first(Vector{{3.0, 1.0, 1.0, 2.0}}) == 1);
  const Vector curve{{0.9, 0.5, 0.4, 0.4, 0.7}};
  CHECK(argmin_first(curve) == argmin_first((curve.array() + 12.5).matrix()));
}

TEST_CASE("cross-validation fold-count preconditions") {
  const auto inst = oracle::random_instance(1, 10, 2, Link::identity, true);
  const Vector grid{{0.5, 0.1}};
  CHECK_THROWS_AS(cross_validate(inst.L, inst.y, inst.w, Link::identity, 1, grid, 1), Error);
  CHECK_THROWS_AS(cross_validate(inst.L, inst.y, inst.w, Link::identity, 6, grid, 1), Error);
  CHECK_NOTHROW(cross_validate(inst.L, inst.y, inst.w, Link::identity, 5, grid, 1));
  CHECK_NOTHROW(cross_validate(inst.L, inst.y, inst.w, Link::identity, 10, grid, 1));
}

TEST_CASE("leave-one-out loss matches a direct computation") {
  for (Link link : {Link::identity, Link::logit}) {
    const auto inst = oracle::random_instance(link == Link::identity ? 12 : 13, 10, 3, link, false);
    const Vector grid = make_lambda_grid(inst.L, inst.y, inst.w, link, 6, 0.05);
    const CvResult cv = cross_validate(inst.L, inst.y, inst.w, link, 10, grid, 3);

    Vector expected = Vector::Zero(grid.size());
    for (int i = 0; i < 10; ++i) {
      std::vector<int> keep;
      for (int r = 0; r < 10; ++r)
        if (r != i) keep.push_back(r);
      const auto path = fit_lasso_path(inst.L(keep, Eigen::all), inst.y(keep), inst.w(keep), link, grid);
      for (Eigen::Index g = 0; g < grid.size(); ++g) {
        const WorkingModel& m = path[static_cast<std::size_t>(g)].model;
        const double eta = m.intercept + inst.L.row(i).dot(m.coef);
        double loss;
        if (link == Link::identity) {
          loss = (inst.y[i] - eta) * (inst.y[i] - eta);
        } else {
          const double mu = std::clamp(oracle::sigmoid(eta), 1e-10, 1.0 - 1e-10);
          loss = -2.0 * (inst.y[i] * std::log(mu) + (1.0 - inst.y[i]) * std::log(1.0 - mu));
        }
        expected[g] += inst.w[i] * loss;
      }
    }
    expected /= inst.w.sum();
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      CHECK_THAT(cv.mean_cv_loss[g], WithinAbs(expected[g], 1e-12));
    }
  }
}

TEST_CASE("pure-noise response selects a large penalty") {
  int upper = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Matrix L = gaussian_matrix(1000 + seed, 100, 20);
    PhiloxStream rng(seed, 9);
    Vector y(100);
    for (int i = 0; i < 100; ++i) y[i] = rng.normal();
    const CvLassoFit cv = fit_lasso_cv(L, y, Vector::Ones(100), Link::identity, 10, seed);
    if (cv.cv.index_min < 50) ++upper;
  }
  CHECK(upper >= 80);
}

TEST_CASE("cross-validation is deterministic and the fit sits at lambda_min") {
  const auto inst = oracle::random_instance(77, 60, 8, Link::logit, false);
  const CvLassoFit a = fit_lasso_cv(inst.L, inst.y, inst.w, Link::logit, 5, 11);
  const CvLassoFit b = fit_lasso_cv(inst.L, inst.y, inst.w, Link::logit, 5, 11);
  CHECK(a.cv.mean_cv_loss == b.cv.mean_cv_loss);
  CHECK(a.cv.fold_assignment == b.cv.fold_assignment);
  CHECK(a.fit.model.coef == b.fit.model.coef);
  CHECK(a.fit.lambda == a.cv.lambda_min);
  CHECK(a.cv.lambda_min == a.cv.lambda_grid[a.cv.index_min]);
  CHECK(a.cv.mean_cv_loss[a.cv.index_min] == a.cv.mean_cv_loss.minCoeff());
}

TEST_CASE("refit: intercept-only models") {
  const auto inst = oracle::random_instance(3, 30, 4, Link::identity, false);
  const Refit lin = refit_support(inst.L, inst.y, inst.w, Link::identity, {});
  CHECK_THAT(lin.model.intercept, WithinRel(inst.w.dot(inst.y) / inst.w.sum(), 1e-12));
  CHECK(lin.model.coef.isZero());

  const auto bin = oracle::random_instance(3, 30, 4, Link::logit, false);
  const Refit lg = refit_support(bin.L, bin.y, bin.w, Link::logit, {});
  CHECK_THAT(lg.model.intercept, WithinAbs(logit(bin.w.dot(bin.y) / bin.w.sum()), 1e-8));
}

TEST_CASE("refit equals textbook weighted least squares") {
  const auto inst = oracle::random_instance(50, 50, 5, Link::identity, false);
  const std::vector<int> support{0, 2, 4};
  const Refit r = refit_support(inst.L, inst.y, inst.w, Link::identity, support);
  Matrix X(50, 4);
  X.col(0).setOnes();
  for (int c = 0; c < 3; ++c) X.col(c + 1) = inst.L.col(support[static_cast<std::size_t>(c)]);
  const Vector theta = oracle::normal_equations(X, inst.y, inst.w);
  CHECK_THAT(r.model.intercept, WithinAbs(theta[0], 1e-10));
  for (int c = 0; c < 3; ++c) {
    CHECK_THAT(r.model.coef[support[static_cast<std::size_t>(c)]], WithinAbs(theta[c + 1], 1e-10));
  }
  CHECK(r.model.coef[1] == 0.0);
  CHECK(r.model.coef[3] == 0.0);
  CHECK(r.dropped.empty());
}

TEST_CASE("refit logistic solves the score equations") {
  const auto inst = oracle::random_instance(8, 60, 4, Link::logit, false);
  const Refit r = refit_support(inst.L, inst.y, inst.w, Link::logit, {1, 3});
  REQUIRE(r.converged);
  Vector g = Vector::Zero(3);
  for (int i = 0; i < 60; ++i) {
    const double res = inst.w[i] * (inst.y[i] - oracle::sigmoid(r.model.intercept + inst.L.row(i).dot(r.model.coef)));
    g[0] += res;
    g[1] += res * inst.L(i, 1);
    g[2] += res * inst.L(i, 3);
  }
  CHECK(g.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("refit drops dependent columns, keeping the lowest index") {
  auto inst = oracle::random_instance(5, 40, 4, Link::identity, true);
  inst.L.col(3) = 2.0 * inst.L.col(1) - inst.L.col(0);
  const Refit r = refit_support(inst.L, inst.y, inst.w, Link::identity, {0, 1, 3});
  CHECK(r.dropped == std::vector<int>{3});
  CHECK(r.model.coef[3] == 0.0);
  CHECK(r.model.coef[0] != 0.0);
  CHECK_THROWS_AS(refit_support(inst.L.topRows(3), inst.y.head(3), inst.w.head(3), Link::identity,
                                {0, 1, 2}),
                  Error);
}

TEST_CASE("refit lowers in-sample loss relative to the penalized fit") {
  // Orthonormal design.
  const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(4, 40, 5)).householderQ() *
                   Matrix::Identity(40, 5);
  const Matrix L = Q * std::sqrt(40.0);
  PhiloxStream rng(4, 4);
  Vector y(40);
  for (int i = 0; i < 40; ++i) y[i] = 0.8 * L(i, 0) - 0.6 * L(i, 2) + rng.normal();
  const Vector ones = Vector::Ones(40);
  const LassoFit pen = fit_lasso_linear(L, y, ones, 0.2);
  const Refit ref = refit_support(L, y, ones, Link::identity, pen.model.support());
  const double rss_pen = (y - predict_mean(pen.model, L)).squaredNorm();
  const double rss_ref = (y - predict_mean(ref.model, L)).squaredNorm();
  CHECK(rss_ref < rss_pen);
}
