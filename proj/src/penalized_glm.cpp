#include "hddr/penalized_glm.hpp"

#include "hddr/errors.hpp"
#include "hddr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace hddr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Weighted-standardized copy of the design. Degenerate columns are zeroed
// and excluded from every sweep.
struct Standardized {
  Matrix Z;
  Vector center;
  Vector scale;
  std::vector<char> usable;
  std::vector<int> usable_cols;
  Vector v;  // w / n
};

Standardized standardize(const Matrix& L, const Vector& w) {
  const Eigen::Index n = L.rows();
  const Eigen::Index p = L.cols();
  const double weight_sum = w.sum();
  Standardized s;
  s.Z.resize(n, p);
  s.center.resize(p);
  s.scale.resize(p);
  s.usable.assign(static_cast<std::size_t>(p), 0);
  s.v = w / static_cast<double>(n);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = w.dot(L.col(j)) / weight_sum;
    const Eigen::ArrayXd centered = L.col(j).array() - mean;
    const double var = (w.array() * centered.square()).sum() / weight_sum;
    const double sd = std::sqrt(var);
    s.center[j] = mean;
    if (!(sd > 1e-10 * std::max(1.0, std::abs(mean)))) {
      s.scale[j] = 1.0;
      s.Z.col(j).setZero();
      continue;
    }
    s.scale[j] = sd;
    s.Z.col(j) = centered / sd;
    s.usable[static_cast<std::size_t>(j)] = 1;
    s.usable_cols.push_back(static_cast<int>(j));
  }
  return s;
}

Vector resolve_penalty_factors(const LassoOptions& options, Eigen::Index p) {
  if (options.penalty_factors.size() == 0) return Vector::Ones(p);
  if (options.penalty_factors.size() != p) {
    throw std::invalid_argument("penalty_factors must have one entry per column");
  }
  if ((options.penalty_factors.array() < 0.0).any() ||
      !options.penalty_factors.allFinite()) {
    throw std::invalid_argument("penalty_factors must be finite and non-negative");
  }
  return options.penalty_factors;
}

void check_problem(const Matrix& L, const Vector& y, const Vector& w, Link link) {
  if (y.size() != L.rows() || w.size() != L.rows()) {
    throw std::invalid_argument("L, y and obs_weights must have the same number of rows");
  }
  if (L.rows() < 1 || L.cols() < 1) throw std::invalid_argument("empty design");
  if ((w.array() < 0.0).any() || !w.allFinite() || !(w.sum() > 0.0)) {
    throw std::invalid_argument("obs_weights must be finite, non-negative, with positive sum");
  }
  if (!y.allFinite() || !L.allFinite()) throw std::invalid_argument("non-finite input");
  if (link == Link::logit && !is_binary(y)) {
    throw std::invalid_argument("logistic lasso requires a 0/1 response");
  }
}

double threshold_for(double lambda, double pf) { return pf == 0.0 ? 0.0 : lambda * pf; }

// Quadratic subproblem 1/2 sum_i omega_i (r_i - d0 - z_i'd)^2 + lambda sum_j pf_j |b_j|,
// solved by cyclic coordinate descent. The weighted residual q = omega * r
// is maintained so that the coordinate gradient is z_j'q.
struct Quadratic {
  const Standardized& s;
  const Matrix& Zw;  // omega-scaled columns
  const Vector& a;   // z_j' Zw_j
  const Vector& omega;
  double omega_sum;
  const Vector& pf;
  double lambda;
};

double sweep(const Quadratic& Q, const std::vector<int>& cols, Vector& b, double& b0, Vector& q) {
  double max_change = 0.0;
  if (Q.omega_sum > 0.0) {
    const double d0 = q.sum() / Q.omega_sum;
    if (d0 != 0.0) {
      b0 += d0;
      q.noalias() -= d0 * Q.omega;
      max_change = std::abs(d0);
    }
  }
  for (const int j : cols) {
    const double aj = Q.a[j];
    if (!(aj > 0.0)) continue;
    const double old = b[j];
    const double g = Q.s.Z.col(j).dot(q);
    const double updated = soft_threshold(g + aj * old, threshold_for(Q.lambda, Q.pf[j])) / aj;
    if (updated != old) {
      const double d = updated - old;
      b[j] = updated;
      q.noalias() -= d * Q.Zw.col(j);
      max_change = std::max(max_change, std::abs(d));
    }
  }
  return max_change;
}

struct CdOutcome {
  int sweeps = 0;
  bool hit_cap = false;
};

CdOutcome coordinate_descent(const Quadratic& Q, Vector& b, double& b0, Vector& q, double tol,
                             int max_sweeps) {
  CdOutcome out;
  std::vector<int> active;
  while (out.sweeps < max_sweeps) {
    double change = sweep(Q, Q.s.usable_cols, b, b0, q);
    ++out.sweeps;
    if (change < tol) return out;
    active.clear();
    for (const int j : Q.s.usable_cols) {
      if (b[j] != 0.0 || Q.pf[j] == 0.0) active.push_back(j);
    }
    while (out.sweeps < max_sweeps) {
      change = sweep(Q, active, b, b0, q);
      ++out.sweeps;
      if (change < tol) break;
    }
  }
  out.hit_cap = true;
  return out;
}

// KKT residual given the gradient-side residual score = v * (y - mean).
double kkt_residual(const Standardized& s, const Vector& score, const Vector& b, const Vector& pf,
                    double lambda) {
  double worst = std::abs(score.sum());
  for (const int j : s.usable_cols) {
    const double g = -s.Z.col(j).dot(score);
    const double t = threshold_for(lambda, pf[j]);
    double r;
    if (b[j] != 0.0) {
      r = std::abs(g + (b[j] > 0.0 ? t : -t));
    } else {
      r = std::max(std::abs(g) - t, 0.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

double penalty_value(const Vector& b, const Vector& pf, double lambda) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (b[j] != 0.0 && pf[j] != 0.0) total += pf[j] * std::abs(b[j]);
  }
  return total == 0.0 ? 0.0 : lambda * total;
}

double logistic_loss(const Vector& eta, const Vector& y, const Vector& v) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (v[i] != 0.0) total += v[i] * (log1p_exp(eta[i]) - y[i] * eta[i]);
  }
  return total;
}

Vector logistic_score(const Vector& eta, const Vector& y, const Vector& v) {
  Vector q(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) q[i] = v[i] * (y[i] - expit(eta[i]));
  return q;
}

struct SolveState {
  Vector b;  // standardized coefficients
  double b0 = 0.0;
  int n_iter = 0;
  bool converged = false;
  double kkt = 0.0;
};

class Solver {
 public:
  Solver(const Standardized& s, const Vector& y, Link link, const Vector& pf,
         const SolverControl& control)
      : s_(s), y_(y), link_(link), pf_(pf), control_(control) {
    const Eigen::Index p = s_.Z.cols();
    if (link_ == Link::identity) {
      Zw_ = s_.Z.array().colwise() * s_.v.array();
      a_.resize(p);
      for (Eigen::Index j = 0; j < p; ++j) a_[j] = s_.Z.col(j).dot(Zw_.col(j));
      zw_sum_ = Zw_.colwise().sum().transpose();
      gram_.resize(p, p);
      gram_ready_.assign(static_cast<std::size_t>(p), 0);
    }
    compute_null();
  }

  double lambda_max() const { return lambda_max_; }
  const SolveState& null_state() const { return null_; }

  SolveState solve(double lambda, const SolveState& warm) const {
    if (lambda >= lambda_max_) return null_;
    return link_ == Link::identity ? solve_linear(lambda, warm) : solve_logistic(lambda, warm);
  }

  LassoFit to_fit(const SolveState& st, double lambda) const {
    LassoFit fit;
    fit.lambda = lambda;
    fit.n_iter = st.n_iter;
    fit.converged = st.converged;
    fit.kkt_violation = st.kkt;
    fit.model = WorkingModel::zeros(link_, s_.Z.cols());
    double intercept = st.b0;
    for (Eigen::Index j = 0; j < s_.Z.cols(); ++j) {
      if (!s_.usable[static_cast<std::size_t>(j)]) {
        fit.degenerate_columns.push_back(static_cast<int>(j));
        continue;
      }
      const double c = st.b[j] / s_.scale[j];
      fit.model.coef[j] = c;
      intercept -= c * s_.center[j];
    }
    fit.model.intercept = intercept;
    return fit;
  }

 private:
  void compute_null() {
    const Eigen::Index p = s_.Z.cols();
    bool has_unpenalized = false;
    for (const int j : s_.usable_cols) has_unpenalized = has_unpenalized || pf_[j] == 0.0;

    Vector score;
    if (!has_unpenalized) {
      // A constant response has an exactly zero score.
      const double ybar =
          (y_.array() == y_[0]).all() ? y_[0] : s_.v.dot(y_) / s_.v.sum();
      null_.b = Vector::Zero(p);
      null_.b0 = link_ == Link::identity ? ybar : logit(clip_probability(ybar));
      score = s_.v.array() * (y_.array() - ybar);
      null_.converged = true;
      null_.kkt = std::abs(score.sum());
    } else {
      SolveState start;
      start.b = Vector::Zero(p);
      const double ybar = s_.v.dot(y_) / s_.v.sum();
      start.b0 = link_ == Link::identity ? ybar : logit(clip_probability(ybar));
      null_ = link_ == Link::identity ? solve_linear(kInf, start) : solve_logistic(kInf, start);
      const Vector eta = (s_.Z * null_.b).array() + null_.b0;
      score = link_ == Link::identity ? Vector(s_.v.array() * (y_ - eta).array())
                                      : logistic_score(eta, y_, s_.v);
    }
    lambda_max_ = 0.0;
    for (const int j : s_.usable_cols) {
      if (pf_[j] == 0.0) continue;
      lambda_max_ = std::max(lambda_max_, std::abs(s_.Z.col(j).dot(score)) / pf_[j]);
    }
  }

  // Covariance-update coordinate descent: the gradient Z'q is kept for every
  // column and updated through lazily computed Gram columns, so a coordinate
  // visit costs O(1) and a coefficient change O(p).
  const double* gram_col(int j) const {
    if (!gram_ready_[static_cast<std::size_t>(j)]) {
      gram_.col(j).noalias() = s_.Z.transpose() * Zw_.col(j);
      gram_ready_[static_cast<std::size_t>(j)] = 1;
    }
    return gram_.col(j).data();
  }

  double gram_sweep(const std::vector<int>& cols, double lambda, Vector& b, double& b0,
                    Vector& grad, double& qsum, double omega_sum) const {
    double max_change = 0.0;
    const Eigen::Index p = b.size();
    if (omega_sum > 0.0) {
      const double d0 = qsum / omega_sum;
      if (d0 != 0.0) {
        b0 += d0;
        grad.noalias() -= d0 * zw_sum_;
        qsum -= d0 * omega_sum;
        max_change = std::abs(d0);
      }
    }
    for (const int j : cols) {
      const double aj = a_[j];
      if (!(aj > 0.0)) continue;
      const double old = b[j];
      const double updated = soft_threshold(grad[j] + aj * old, threshold_for(lambda, pf_[j])) / aj;
      if (updated != old) {
        const double d = updated - old;
        b[j] = updated;
        grad.noalias() -= d * Eigen::Map<const Vector>(gram_col(j), p);
        qsum -= d * zw_sum_[j];
        max_change = std::max(max_change, std::abs(d));
      }
    }
    return max_change;
  }

  CdOutcome gram_descent(double lambda, Vector& b, double& b0, const Vector& q, double tol,
                         int max_sweeps) const {
    Vector grad = s_.Z.transpose() * q;
    double qsum = q.sum();
    const double omega_sum = s_.v.sum();
    CdOutcome out;
    std::vector<int> active;
    while (out.sweeps < max_sweeps) {
      double change = gram_sweep(s_.usable_cols, lambda, b, b0, grad, qsum, omega_sum);
      ++out.sweeps;
      if (change < tol) return out;
      active.clear();
      for (const int j : s_.usable_cols) {
        if (b[j] != 0.0 || pf_[j] == 0.0) active.push_back(j);
      }
      while (out.sweeps < max_sweeps) {
        change = gram_sweep(active, lambda, b, b0, grad, qsum, omega_sum);
        ++out.sweeps;
        if (change < tol) break;
      }
    }
    out.hit_cap = true;
    return out;
  }

  Vector linear_score(const SolveState& st) const {
    Vector q = s_.v.array() * (y_ - s_.Z * st.b).array();
    q.array() -= s_.v.array() * st.b0;
    return q;
  }

  SolveState solve_linear(double lambda, const SolveState& warm) const {
    SolveState st = warm;
    st.n_iter = 0;
    double tol = control_.coef_tolerance;
    for (int attempt = 0; attempt < 4; ++attempt) {
      const CdOutcome out = gram_descent(lambda, st.b, st.b0, linear_score(st), tol,
                                         control_.max_sweeps - st.n_iter);
      st.n_iter += out.sweeps;
      st.kkt = kkt_residual(s_, linear_score(st), st.b, pf_, lambda);
      st.converged = st.kkt <= control_.kkt_tolerance;
      if (st.converged || out.hit_cap) break;
      tol /= 100.0;
    }
    return st;
  }

  SolveState solve_logistic(double lambda, const SolveState& warm) const {
    const Eigen::Index n = s_.Z.rows();
    const Eigen::Index p = s_.Z.cols();
    SolveState st = warm;
    st.n_iter = 0;
    st.converged = false;
    Vector eta = (s_.Z * st.b).array() + st.b0;
    double objective = logistic_loss(eta, y_, s_.v) + penalty_value(st.b, pf_, lambda);

    Vector omega(n);
    Vector q(n);
    Matrix Zw(n, p);
    Vector a = Vector::Zero(p);
    double inner_tol = control_.coef_tolerance;
    int sweeps_used = 0;

    for (int it = 1; it <= control_.max_irls; ++it) {
      st.n_iter = it;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = expit(eta[i]);
        const double mc = clip_probability(mu);
        omega[i] = s_.v[i] * mc * (1.0 - mc);
        q[i] = s_.v[i] * (y_[i] - mu);
      }
      for (const int j : s_.usable_cols) {
        Zw.col(j) = s_.Z.col(j).cwiseProduct(omega);
        a[j] = s_.Z.col(j).dot(Zw.col(j));
      }
      const Quadratic Q{s_, Zw, a, omega, omega.sum(), pf_, lambda};

      Vector b_new = st.b;
      double b0_new = st.b0;
      const int budget = std::max(1, control_.max_sweeps - sweeps_used);
      sweeps_used += coordinate_descent(Q, b_new, b0_new, q, inner_tol, budget).sweeps;

      Vector eta_new = (s_.Z * b_new).array() + b0_new;
      double objective_new = logistic_loss(eta_new, y_, s_.v) + penalty_value(b_new, pf_, lambda);
      for (int halving = 0; halving < 30 && !(objective_new <= objective); ++halving) {
        b_new = 0.5 * (b_new + st.b);
        b0_new = 0.5 * (b0_new + st.b0);
        eta_new = (s_.Z * b_new).array() + b0_new;
        objective_new = logistic_loss(eta_new, y_, s_.v) + penalty_value(b_new, pf_, lambda);
      }
      // A rejected step counts as a stall.
      double change = 0.0;
      if (objective_new <= objective) {
        change = objective - objective_new;
        st.b = std::move(b_new);
        st.b0 = b0_new;
        eta = std::move(eta_new);
        objective = objective_new;
      }
      if (change <= control_.objective_tolerance * std::max(std::abs(objective), 1e-300)) {
        st.kkt = kkt_residual(s_, logistic_score(eta, y_, s_.v), st.b, pf_, lambda);
        if (st.kkt <= control_.kkt_tolerance) {
          st.converged = true;
          return st;
        }
        if (inner_tol <= 1e-13) break;
        inner_tol = std::max(inner_tol / 100.0, 1e-13);
      }
    }
    st.kkt = kkt_residual(s_, logistic_score(eta, y_, s_.v), st.b, pf_, lambda);
    st.converged = st.kkt <= control_.kkt_tolerance;
    return st;
  }

  const Standardized& s_;
  const Vector& y_;
  Link link_;
  const Vector& pf_;
  SolverControl control_;
  Matrix Zw_;
  Vector a_;
  Vector zw_sum_;
  mutable Matrix gram_;
  mutable std::vector<char> gram_ready_;
  SolveState null_;
  double lambda_max_ = 0.0;
};

std::vector<LassoFit> path_on(const Standardized& s, const Vector& y, Link link, const Vector& pf,
                              const Vector& grid, Eigen::Index count,
                              const SolverControl& control) {
  Solver solver(s, y, link, pf, control);
  std::vector<LassoFit> fits;
  fits.reserve(static_cast<std::size_t>(count));
  SolveState state = solver.null_state();
  for (Eigen::Index k = 0; k < count; ++k) {
    if (k > 0 && grid[k] > grid[k - 1]) throw std::invalid_argument("lambda grid must descend");
    if (grid[k] < 0.0) throw std::invalid_argument("lambda must be non-negative");
    state = solver.solve(grid[k], state);
    fits.push_back(solver.to_fit(state, grid[k]));
  }
  return fits;
}

Matrix select_rows(const Matrix& M, const std::vector<int>& rows) { return M(rows, Eigen::all); }

Vector select_rows(const Vector& v, const std::vector<int>& rows) { return v(rows); }

double heldout_loss(Link link, double y, double mean) {
  if (link == Link::identity) return (y - mean) * (y - mean);
  const double m = clip_probability(mean);
  return -2.0 * (y * std::log(m) + (1.0 - y) * std::log1p(-m));
}

}  // namespace

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

LassoFit fit_lasso(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                   double lambda, const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  Solver solver(s, y, link, pf, options.control);
  return solver.to_fit(solver.solve(lambda, solver.null_state()), lambda);
}

LassoFit fit_lasso_linear(const Matrix& L, const Vector& y, const Vector& obs_weights,
                          double lambda, const LassoOptions& options) {
  return fit_lasso(L, y, obs_weights, Link::identity, lambda, options);
}

LassoFit fit_lasso_logistic(const Matrix& L, const Vector& y, const Vector& obs_weights,
                            double lambda, const LassoOptions& options) {
  return fit_lasso(L, y, obs_weights, Link::logit, lambda, options);
}

std::vector<LassoFit> fit_lasso_path(const Matrix& L, const Vector& y, const Vector& obs_weights,
                                     Link link, const Vector& grid, const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  return path_on(s, y, link, pf, grid, grid.size(), options.control);
}

double lambda_max(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                  const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  return Solver(s, y, link, pf, options.control).lambda_max();
}

Vector make_lambda_grid(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int n_lambda, double ratio, const LassoOptions& options) {
  if (n_lambda < 2) throw std::invalid_argument("n_lambda must be at least 2");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must lie in (0, 1)");
  const double top = lambda_max(L, y, obs_weights, link, options);
  if (top == 0.0) return Vector::Zero(1);
  Vector grid(n_lambda);
  const double step = std::log(ratio) / (n_lambda - 1);
  for (int k = 0; k < n_lambda; ++k) grid[k] = top * std::exp(step * k);
  grid[0] = top;
  return grid;
}

Vector default_lambda_grid(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                           const LassoOptions& options) {
  const double ratio = L.cols() >= L.rows() ? 0.01 : 1e-4;
  return make_lambda_grid(L, y, obs_weights, link, 100, ratio, options);
}

std::vector<int> assign_folds(Eigen::Index n, int k, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  PhiloxStream rng(seed, 0xF01DULL);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<int> folds(static_cast<std::size_t>(n));
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    folds[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return folds;
}

Eigen::Index argmin_first(const Vector& losses) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < losses.size(); ++k) {
    if (losses[k] < losses[best]) best = k;
  }
  return best;
}

CvResult cross_validate(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int k, const Vector& grid, std::uint64_t seed,
                        const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  const Eigen::Index n = L.rows();
  if (k < 2 || k > n || (k != n && n < 2 * static_cast<Eigen::Index>(k))) {
    std::ostringstream msg;
    msg << k << " folds on " << n << " observations (need k >= 2 and n >= 2k, or k == n)";
    throw Error(Errc::fold_too_small, msg.str());
  }
  if (grid.size() < 1) throw std::invalid_argument("empty lambda grid");
  const Vector pf = resolve_penalty_factors(options, L.cols());

  CvResult out;
  out.lambda_grid = grid;
  out.fold_assignment = assign_folds(n, k, seed);

  Vector total = Vector::Zero(grid.size());
  for (int fold = 0; fold < k; ++fold) {
    std::vector<int> train, test;
    for (Eigen::Index i = 0; i < n; ++i) {
      (out.fold_assignment[static_cast<std::size_t>(i)] == fold ? test : train)
          .push_back(static_cast<int>(i));
    }
    const Vector w_train = select_rows(obs_weights, train);
    if (!(w_train.sum() > 0.0)) {
      throw Error(Errc::fold_too_small, "a training fold has zero total weight");
    }
    const Matrix L_train = select_rows(L, train);
    const Vector y_train = select_rows(y, train);
    const Matrix L_test = select_rows(L, test);
    const Standardized s = standardize(L_train, w_train);
    const std::vector<LassoFit> path =
        path_on(s, y_train, link, pf, grid, grid.size(), options.control);

    Vector fold_loss = Vector::Zero(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      const Vector mean = path[static_cast<std::size_t>(g)].model.linear_predictor(L_test);
      double sum = 0.0;
      for (std::size_t t = 0; t < test.size(); ++t) {
        const int i = test[t];
        const double m = link == Link::logit ? expit(mean[static_cast<Eigen::Index>(t)])
                                             : mean[static_cast<Eigen::Index>(t)];
        sum += obs_weights[i] * heldout_loss(link, y[i], m);
      }
      fold_loss[g] = sum;
    }
    total += fold_loss;
  }
  out.mean_cv_loss = total / obs_weights.sum();
  out.index_min = argmin_first(out.mean_cv_loss);
  out.lambda_min = grid[out.index_min];
  return out;
}

CvLassoFit fit_lasso_cv(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                        int k, std::uint64_t seed, const LassoOptions& options) {
  const Vector grid = default_lambda_grid(L, y, obs_weights, link, options);
  CvLassoFit out;
  out.cv = cross_validate(L, y, obs_weights, link, k, grid, seed, options);
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  std::vector<LassoFit> path = path_on(s, y, link, pf, grid, out.cv.index_min + 1, options.control);
  out.fit = std::move(path.back());
  return out;
}

namespace {

// Columns of [1, L_support] kept after dropping, in index order, every column
// that is linearly dependent on the ones before it.
std::vector<int> independent_columns(const Matrix& L, const Vector& sqrt_w,
                                      const std::vector<int>& support, std::vector<int>& dropped) {
  const Eigen::Index n = L.rows();
  auto design = [&](const std::vector<int>& cols) {
    Matrix X(n, static_cast<Eigen::Index>(cols.size()) + 1);
    X.col(0) = sqrt_w;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      X.col(static_cast<Eigen::Index>(c) + 1) = L.col(cols[c]).cwiseProduct(sqrt_w);
    }
    return X;
  };
  const Eigen::ColPivHouseholderQR<Matrix> full(design(support));
  if (full.rank() == static_cast<Eigen::Index>(support.size()) + 1) return support;

  std::vector<int> kept;
  for (const int j : support) {
    std::vector<int> trial = kept;
    trial.push_back(j);
    const Eigen::ColPivHouseholderQR<Matrix> qr(design(trial));
    if (qr.rank() == static_cast<Eigen::Index>(trial.size()) + 1) {
      kept = std::move(trial);
    } else {
      dropped.push_back(j);
    }
  }
  return kept;
}

}  // namespace

Refit refit_support(const Matrix& L, const Vector& y, const Vector& obs_weights, Link link,
                    const std::vector<int>& support) {
  check_problem(L, y, obs_weights, link);
  const Eigen::Index n = L.rows();
  if (static_cast<Eigen::Index>(support.size()) >= n) {
    std::ostringstream msg;
    msg << "support of size " << support.size() << " with only " << n << " observations";
    throw Error(Errc::support_too_large, msg.str());
  }
  for (const int j : support) {
    if (j < 0 || j >= L.cols()) throw std::invalid_argument("support index out of range");
  }
  std::vector<int> sorted = support;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  Refit out;
  const Vector sqrt_w = obs_weights.cwiseSqrt();
  const std::vector<int> cols = independent_columns(L, sqrt_w, sorted, out.dropped);
  const auto k = static_cast<Eigen::Index>(cols.size()) + 1;
  Matrix X(n, k);
  X.col(0).setOnes();
  for (Eigen::Index c = 1; c < k; ++c) X.col(c) = L.col(cols[static_cast<std::size_t>(c - 1)]);

  Vector theta(k);
  const double ybar = obs_weights.dot(y) / obs_weights.sum();
  if (link == Link::identity) {
    const Matrix Xw = X.array().colwise() * sqrt_w.array();
    const Vector yw = y.cwiseProduct(sqrt_w);
    theta = Xw.colPivHouseholderQr().solve(yw);
    if (k == 1) theta[0] = ybar;
  } else {
    theta.setZero();
    theta[0] = logit(clip_probability(ybar));
    auto deviance = [&](const Vector& eta) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        total += obs_weights[i] * (log1p_exp(eta[i]) - y[i] * eta[i]);
      }
      return total;
    };
    Vector eta = X * theta;
    double dev = deviance(eta);
    out.converged = false;
    for (int it = 0; it < 100; ++it) {
      Vector h(n), g(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = expit(eta[i]);
        const double mc = clip_probability(mu);
        h[i] = obs_weights[i] * mc * (1.0 - mc);
        g[i] = obs_weights[i] * (y[i] - mu);
      }
      const Matrix H = X.transpose() * (X.array().colwise() * h.array()).matrix();
      const Vector grad = X.transpose() * g;
      const Vector step = H.ldlt().solve(grad);
      if (!step.allFinite()) break;
      Vector candidate = theta + step;
      Vector eta_c = X * candidate;
      double dev_c = deviance(eta_c);
      for (int halving = 0; halving < 30 && !(dev_c <= dev); ++halving) {
        candidate = 0.5 * (candidate + theta);
        eta_c = X * candidate;
        dev_c = deviance(eta_c);
      }
      if (!(dev_c <= dev)) {
        out.converged = true;  // no further descent available
        break;
      }
      const double change = dev - dev_c;
      theta = std::move(candidate);
      eta = std::move(eta_c);
      dev = dev_c;
      if (change <= 1e-10 * (std::abs(dev) + 0.1 * obs_weights.sum())) {
        out.converged = true;
        break;
      }
    }
  }

  out.model = WorkingModel::zeros(link, L.cols());
  out.model.intercept = theta[0];
  for (Eigen::Index c = 1; c < k; ++c) out.model.coef[cols[static_cast<std::size_t>(c - 1)]] = theta[c];
  return out;
}

double kkt_check(const LassoFit& fit, const Matrix& L, const Vector& y, const Vector& obs_weights,
                 Link link, const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  Vector b = Vector::Zero(L.cols());
  for (const int j : s.usable_cols) b[j] = fit.model.coef[j] * s.scale[j];
  const Vector eta = fit.model.linear_predictor(L);
  const Vector score = link == Link::identity ? Vector(s.v.array() * (y - eta).array())
                                              : logistic_score(eta, y, s.v);
  return kkt_residual(s, score, b, pf, fit.lambda);
}

double penalized_objective(const LassoFit& fit, const Matrix& L, const Vector& y,
                           const Vector& obs_weights, Link link, const LassoOptions& options) {
  check_problem(L, y, obs_weights, link);
  const Vector pf = resolve_penalty_factors(options, L.cols());
  const Standardized s = standardize(L, obs_weights);
  Vector b = Vector::Zero(L.cols());
  for (const int j : s.usable_cols) b[j] = fit.model.coef[j] * s.scale[j];
  const Vector eta = fit.model.linear_predictor(L);
  double loss;
  if (link == Link::identity) {
    loss = 0.5 * (s.v.array() * (y - eta).array().square()).sum();
  } else {
    loss = logistic_loss(eta, y, s.v);
  }
  return loss + penalty_value(b, pf, fit.lambda);
}

}  // namespace hddr
