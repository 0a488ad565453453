#include "pluto/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pluto/error.hpp"

namespace pluto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double mean_response(std::span<const std::uint8_t> y) {
  double s = 0.0;
  for (auto v : y) s += v;
  return y.empty() ? 0.0 : s / static_cast<double>(y.size());
}

double logit(double p) { return std::log(p / (1.0 - p)); }

/// Regressors after centering/scaling, with an intercept column in front.
struct Standardized {
  Matrix design;  // n x (K+1), column 0 all ones; zero-variance columns zeroed
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<bool> active;
};

Standardized standardize(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  Standardized s;
  s.design.resize(n, k + 1);
  s.design.col(0).setOnes();
  s.center.assign(k, 0.0);
  s.scale.assign(k, 1.0);
  s.active.assign(k, false);
  for (Eigen::Index j = 0; j < k; ++j) {
    double mu = n > 0 ? x.col(j).mean() : 0.0;
    double var = n > 0 ? (x.col(j).array() - mu).square().mean() : 0.0;
    double sd = std::sqrt(var);
    s.center[j] = mu;
    if (sd > 1e-12 * std::max(1.0, std::abs(mu))) {
      s.scale[j] = sd;
      s.active[j] = true;
      s.design.col(j + 1) = (x.col(j).array() - mu) / sd;
    } else {
      s.design.col(j + 1).setZero();
    }
  }
  return s;
}

double penalty_value(const Vector& theta, const PenaltySpec& pen) {
  double l1 = theta.tail(theta.size() - 1).cwiseAbs().sum();
  double l2 = theta.tail(theta.size() - 1).squaredNorm();
  return pen.lambda * ((1.0 - pen.alpha) * 0.5 * l2 + pen.alpha * l1);
}

// Mean negative log-likelihood at `eta` against 0/1 `y`; fills the fitted
// probabilities.
double mean_nll(const Vector& eta, const Vector& y, Vector& prob) {
  const Eigen::ArrayXd e = (-eta.array().abs()).exp();
  const Eigen::ArrayXd one_e = 1.0 + e;
  prob = ((eta.array() >= 0.0).select(1.0, e) / one_e).matrix();
  const double s = (eta.array().max(0.0) + one_e.log()).sum() - y.dot(eta);
  return s / static_cast<double>(eta.size());
}

Vector as_vector(std::span<const std::uint8_t> y) {
  Vector out(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<Eigen::Index>(i)] = y[i];
  return out;
}

struct EnState {
  Vector theta;  // (b0, b1..bK) on the standardized scale
  double nll = 0.0;  // mean negative log-likelihood at theta
  bool converged = false;
  int n_iter = 0;
};

/// Outer IRLS / inner covariance-mode coordinate descent on the standardized
/// design, warm-started from `theta`.
EnState solve_standardized(const Standardized& s, std::span<const std::uint8_t> y, const PenaltySpec& pen,
                           Vector theta, const GlmOptions& opts) {
  const Eigen::Index n = s.design.rows();
  const Eigen::Index p = s.design.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l1 = pen.lambda * pen.alpha;
  const double l2 = pen.lambda * (1.0 - pen.alpha);

  EnState st;
  const Vector yd = as_vector(y);
  Vector eta = s.design * theta;
  Vector prob(n), trial_prob(n);
  double nll = mean_nll(eta, yd, prob);
  double obj = nll + penalty_value(theta, pen);
  Vector w(n), z(n);
  Matrix weighted(n, p);
  for (int iter = 1; iter <= opts.max_irls_iter; ++iter) {
    st.n_iter = iter;
    w = (prob.array() * (1.0 - prob.array())).max(opts.weight_floor).matrix();
    z = (eta.array() + (yd - prob).array() / w.array()).matrix();
    weighted = s.design.array().colwise() * w.array();
    Matrix gram(p, p);
    Vector rhs(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = 0; k <= j; ++k) gram(j, k) = gram(k, j) = weighted.col(j).dot(s.design.col(k)) * inv_n;
      rhs[j] = weighted.col(j).dot(z) * inv_n;
    }

    Vector next = theta;
    Vector g = gram * next;  // running G * theta
    for (int sweep = 0; sweep < opts.max_cd_sweeps; ++sweep) {
      double max_step = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        double gjj = gram(j, j);
        if (j > 0 && !s.active[j - 1]) continue;
        double r = rhs[j] - g[j] + gjj * next[j];
        double updated = (j == 0) ? r / gjj : soft_threshold(r, l1) / (gjj + l2);
        double delta = updated - next[j];
        if (delta != 0.0) {
          g += gram.col(j) * delta;
          next[j] = updated;
          max_step = std::max(max_step, std::abs(delta) * std::sqrt(gjj));
        }
      }
      if (max_step < opts.cd_tol) break;
    }

    // Step halving on the penalized objective.
    Vector step = next - theta;
    double t = 1.0;
    Vector trial_eta = s.design * next;
    double trial_nll = mean_nll(trial_eta, yd, trial_prob);
    double new_obj = trial_nll + penalty_value(next, pen);
    int halvings = 0;
    while (!(new_obj <= obj + 1e-13 * std::max(1.0, std::abs(obj)))) {
      if (++halvings > opts.max_halvings) {
        st.theta = theta;
        st.nll = nll;
        return st;
      }
      t *= 0.5;
      next = theta + t * step;
      trial_eta = s.design * next;
      trial_nll = mean_nll(trial_eta, yd, trial_prob);
      new_obj = trial_nll + penalty_value(next, pen);
    }
    double change = (t * step).cwiseAbs().maxCoeff();
    theta = next;
    eta.swap(trial_eta);
    prob.swap(trial_prob);
    nll = trial_nll;
    obj = new_obj;
    if (!std::isfinite(obj)) break;
    if (change < opts.coef_tol) {
      st.converged = true;
      break;
    }
  }
  st.theta = theta;
  st.nll = nll;
  return st;
}

FittedGlm to_original_scale(const Standardized& s, const EnState& st, std::span<const std::uint8_t> y,
                            const PenaltySpec& pen) {
  FittedGlm fit;
  const std::size_t k = s.center.size();
  fit.coefficients.assign(k, 0.0);
  fit.intercept = st.theta[0];
  for (std::size_t j = 0; j < k; ++j) {
    if (!s.active[j]) continue;
    fit.coefficients[j] = st.theta[j + 1] / s.scale[j];
    fit.intercept -= fit.coefficients[j] * s.center[j];
  }
  fit.penalty = pen;
  fit.converged = st.converged;
  fit.n_iter = st.n_iter;
  fit.center = s.center;
  fit.scale = s.scale;
  fit.deviance = 2.0 * static_cast<double>(y.size()) * st.nll;
  return fit;
}

Vector null_start(const Standardized& s, std::span<const std::uint8_t> y) {
  Vector theta = Vector::Zero(s.design.cols());
  double ybar = mean_response(y);
  theta[0] = (ybar > 0.0 && ybar < 1.0) ? logit(ybar) : 0.0;
  return theta;
}

}  // namespace

double FittedGlm::linear_predictor(std::span<const double> x) const {
  double eta = intercept;
  for (std::size_t j = 0; j < coefficients.size() && j < x.size(); ++j) eta += coefficients[j] * x[j];
  return eta;
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_likelihood_term(std::uint8_t y, double eta) { return (y ? eta : 0.0) - softplus(eta); }

double predict_prob(const FittedGlm& model, std::span<const double> x) {
  static const double kUpper = std::nextafter(1.0, 0.0);
  return std::clamp(sigmoid(model.linear_predictor(x)), std::numeric_limits<double>::denorm_min(), kUpper);
}

std::vector<double> predict_probs(const FittedGlm& model, const Matrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[j] = x(i, j);
    out[i] = predict_prob(model, row);
  }
  return out;
}

double deviance_of(std::span<const std::uint8_t> y, const Vector& eta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += log_likelihood_term(y[i], eta[i]);
  return -2.0 * s;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

FittedGlm fit_irls(const Matrix& x, std::span<const std::uint8_t> y, const GlmOptions& opts) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols() + 1;
  Matrix design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = x;

  FittedGlm fit;
  fit.coefficients.assign(static_cast<std::size_t>(p - 1), 0.0);
  const double ybar = mean_response(y);
  if (n == 0 || ybar <= 0.0 || ybar >= 1.0) {
    // Pure response: the MLE sits at infinity.
    fit.intercept = ybar >= 1.0 ? kInf : -kInf;
    fit.deviance = 0.0;
    return fit;
  }

  Vector beta = Vector::Zero(p);
  beta[0] = logit(ybar);
  Vector eta = design * beta;
  double dev = deviance_of(y, eta);
  Vector w(n), resid(n);
  for (int iter = 1; iter <= opts.max_irls_iter; ++iter) {
    fit.n_iter = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      double pr = sigmoid(eta[i]);
      w[i] = std::max(pr * (1.0 - pr), opts.weight_floor);
      resid[i] = y[i] - pr;
    }
    Matrix hess = design.transpose() * (design.array().colwise() * w.array()).matrix();
    Vector grad = design.transpose() * resid;
    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const auto diag = ldlt.vectorD();
    if (diag.minCoeff() <= 1e-10 * std::max(1.0, diag.maxCoeff())) break;  // rank deficient
    Vector step = ldlt.solve(grad);

    double t = 1.0;
    Vector trial = beta + step;
    Vector trial_eta = design * trial;
    double trial_dev = deviance_of(y, trial_eta);
    int halvings = 0;
    bool ok = true;
    while (!(trial_dev <= dev + 1e-12 * std::max(1.0, dev))) {
      if (++halvings > opts.max_halvings) {
        ok = false;
        break;
      }
      t *= 0.5;
      trial = beta + t * step;
      trial_eta = design * trial;
      trial_dev = deviance_of(y, trial_eta);
    }
    if (!ok) break;
    double change = (t * step).cwiseAbs().maxCoeff();
    beta = trial;
    eta = trial_eta;
    dev = trial_dev;
    if (change < opts.coef_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.intercept = beta[0];
  for (Eigen::Index j = 1; j < p; ++j) fit.coefficients[j - 1] = beta[j];
  fit.deviance = dev;
  return fit;
}

FittedGlm fit_elastic_net(const Matrix& x, std::span<const std::uint8_t> y, const PenaltySpec& penalty,
                          const GlmOptions& opts) {
  if (penalty.alpha < 0.0 || penalty.alpha > 1.0 || penalty.lambda < 0.0)
    throw ConfigError("elastic-net penalty needs alpha in [0,1] and lambda >= 0");
  Standardized s = standardize(x);
  const double ybar = mean_response(y);
  if (y.empty() || ybar <= 0.0 || ybar >= 1.0) {
    FittedGlm fit;
    fit.coefficients.assign(static_cast<std::size_t>(x.cols()), 0.0);
    fit.intercept = ybar >= 1.0 ? kInf : -kInf;
    fit.penalty = penalty;
    fit.center = s.center;
    fit.scale = s.scale;
    return fit;
  }
  EnState st = solve_standardized(s, y, penalty, null_start(s, y), opts);
  return to_original_scale(s, st, y, penalty);
}

double lambda_max(const Matrix& x, std::span<const std::uint8_t> y, double alpha) {
  const double a = alpha > 0.0 ? alpha : 1e-3;
  Standardized s = standardize(x);
  const double ybar = mean_response(y);
  double best = 0.0;
  for (Eigen::Index j = 1; j < s.design.cols(); ++j) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < s.design.rows(); ++i) g += s.design(i, j) * (y[i] - ybar);
    best = std::max(best, std::abs(g));
  }
  return best / (static_cast<double>(y.size()) * a);
}

std::vector<double> lambda_path(const Matrix& x, std::span<const std::uint8_t> y, double alpha, int n_lambda,
                                double eps) {
  if (n_lambda < 1) throw ConfigError("n_lambda must be positive");
  double top = lambda_max(x, y, alpha);
  if (!(top > 0.0)) top = 1.0;  // no usable regressor: any grid gives the null model
  std::vector<double> out(static_cast<std::size_t>(n_lambda));
  if (n_lambda == 1) {
    out[0] = top;
    return out;
  }
  const double ratio = std::pow(eps, 1.0 / (n_lambda - 1));
  out[0] = top;
  for (int k = 1; k < n_lambda; ++k) out[k] = out[k - 1] * ratio;
  return out;
}

std::vector<FittedGlm> fit_path(const Matrix& x, std::span<const std::uint8_t> y, double alpha,
                                std::span<const double> lambdas, const GlmOptions& opts, const PathStop& stop) {
  Standardized s = standardize(x);
  std::vector<FittedGlm> out;
  out.reserve(lambdas.size());
  const double ybar = mean_response(y);
  Vector theta = null_start(s, y);
  bool failed = y.empty() || ybar <= 0.0 || ybar >= 1.0;
  double null_dev = 0.0;
  if (!failed) {
    Vector eta = s.design * theta, prob(eta.size());
    null_dev = 2.0 * static_cast<double>(y.size()) * mean_nll(eta, as_vector(y), prob);
  }
  double prev_ratio = 0.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    PenaltySpec pen{alpha, lambdas[k]};
    if (failed) {
      // Once a fit along the path diverges, smaller lambdas do too.
      FittedGlm f;
      f.coefficients.assign(static_cast<std::size_t>(x.cols()), 0.0);
      f.penalty = pen;
      f.deviance = kInf;
      out.push_back(std::move(f));
      continue;
    }
    EnState st = solve_standardized(s, y, pen, theta, opts);
    if (!st.converged) failed = true;
    theta = st.theta;
    out.push_back(to_original_scale(s, st, y, pen));
    if (stop.enabled && st.converged && null_dev > 0.0) {
      const double ratio = 1.0 - out.back().deviance / null_dev;
      if (static_cast<int>(k) + 1 >= stop.min_lambdas && (ratio - prev_ratio < stop.fdev || ratio > stop.devmax))
        break;
      prev_ratio = ratio;
    }
  }
  return out;
}

std::vector<int> stratified_folds(std::span<const std::uint8_t> y, int k, Engine& rng) {
  std::vector<int> fold(y.size(), 0);
  int next = 0;
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

std::optional<CvResult> cv_select_lambda(const Matrix& x, std::span<const std::uint8_t> y, const CvOptions& opts,
                                         Engine& rng) {
  if (opts.k_folds < 2) throw ConfigError("cv_folds must be at least 2");
  const std::size_t n = y.size();
  std::size_t n_pos = 0;
  for (auto v : y) n_pos += v;
  if (n < static_cast<std::size_t>(opts.k_folds) || n_pos < 2 || n - n_pos < 2) return std::nullopt;

  CvResult res;
  res.lambdas = lambda_path(x, y, opts.alpha, opts.n_lambda);
  std::vector<FittedGlm> full = fit_path(x, y, opts.alpha, res.lambdas, opts.glm, opts.stop);
  res.lambdas.resize(full.size());
  std::vector<int> fold = stratified_folds(y, opts.k_folds, rng);

  std::vector<double> total(res.lambdas.size(), 0.0);
  for (int f = 0; f < opts.k_folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    if (test.empty()) continue;
    Matrix xtr = x(train, Eigen::all);
    std::vector<std::uint8_t> ytr(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) ytr[i] = y[train[i]];
    std::vector<FittedGlm> path = fit_path(xtr, ytr, opts.alpha, res.lambdas, opts.glm, opts.stop);
    Matrix xte = x(test, Eigen::all);
    for (std::size_t l = 0; l < total.size(); ++l) {
      // A fold path that stopped early keeps its last fit.
      const FittedGlm& fit = path[std::min(l, path.size() - 1)];
      if (!fit.converged) {
        total[l] = kInf;
        continue;
      }
      Vector beta = Eigen::Map<const Vector>(fit.coefficients.data(), xte.cols());
      Vector eta = (xte * beta).array() + fit.intercept;
      double d = 0.0;
      for (std::size_t i = 0; i < test.size(); ++i) d -= 2.0 * log_likelihood_term(y[test[i]], eta[i]);
      total[l] += d;
    }
  }

  res.cv_deviance.resize(total.size());
  std::size_t best = total.size();
  for (std::size_t l = 0; l < total.size(); ++l) {
    res.cv_deviance[l] = total[l] / static_cast<double>(n);
    if (!full[l].converged) continue;
    if (best == total.size() || total[l] < total[best]) best = l;
  }
  if (best == total.size() || !std::isfinite(total[best])) return std::nullopt;
  res.lambda_star = res.lambdas[best];
  res.model = std::move(full[best]);
  return res;
}

Vector loglik_gradient(const Matrix& x, std::span<const std::uint8_t> y, double intercept, const Vector& beta) {
  Vector g = Vector::Zero(x.cols() + 1);
  Vector eta = (x * beta).array() + intercept;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double r = y[i] - sigmoid(eta[i]);
    g[0] += r;
    g.tail(x.cols()) += r * x.row(i).transpose();
  }
  return g;
}

}  // namespace pluto
