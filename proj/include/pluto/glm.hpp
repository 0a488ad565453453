#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pluto/rng.hpp"

namespace pluto {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Elastic-net penalty lambda * [ (1-alpha)/2 ||b||^2 + alpha ||b||_1 ].
struct PenaltySpec {
  double alpha = 1.0;
  double lambda = 0.0;
};

struct GlmOptions {
  int max_irls_iter = 100;
  double coef_tol = 1e-8;      // outer loop: max coefficient change
  double cd_tol = 1e-9;        // inner loop: max scaled coordinate update
  int max_cd_sweeps = 100000;
  int max_halvings = 10;
  double weight_floor = 1e-5;
};

/// A fitted logistic model. Coefficients are on the caller's (unstandardized)
/// scale and indexed like the columns of the regressor matrix.
struct FittedGlm {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::optional<PenaltySpec> penalty;
  double deviance = 0.0;  // -2 log-likelihood on the training rows
  bool converged = false;
  int n_iter = 0;
  std::vector<double> center;  // standardization used internally (penalized fits)
  std::vector<double> scale;

  double linear_predictor(std::span<const double> x) const;
};

/// Overflow-safe logistic function.
double sigmoid(double eta);

/// Bernoulli log-likelihood of one observation with linear predictor eta.
double log_likelihood_term(std::uint8_t y, double eta);

double predict_prob(const FittedGlm& model, std::span<const double> x);
std::vector<double> predict_probs(const FittedGlm& model, const Matrix& x);

/// Binomial deviance of linear predictors against 0/1 responses.
double deviance_of(std::span<const std::uint8_t> y, const Vector& eta);

double soft_threshold(double z, double t);

/// Unpenalized maximum likelihood by Newton/IRLS with step halving.
/// Non-convergence (separation, singular design) is reported through
/// `converged == false`; the last iterate is kept.
FittedGlm fit_irls(const Matrix& x, std::span<const std::uint8_t> y, const GlmOptions& opts = {});

/// Penalized fit. Regressors are standardized internally (population SD)
/// and the penalty acts on the standardized slopes; the objective is
///   -(1/N) loglik + lambda * P_alpha(beta).
/// The intercept is never penalized. Zero-variance columns get coefficient 0.
FittedGlm fit_elastic_net(const Matrix& x, std::span<const std::uint8_t> y, const PenaltySpec& penalty,
                          const GlmOptions& opts = {});

/// Decreasing geometric grid from lambda_max to eps * lambda_max.
/// alpha == 0 uses alpha = 0.001 for lambda_max.
std::vector<double> lambda_path(const Matrix& x, std::span<const std::uint8_t> y, double alpha, int n_lambda,
                                double eps = 1e-4);

double lambda_max(const Matrix& x, std::span<const std::uint8_t> y, double alpha);

/// Early exit along a lambda path: stop once the fraction of null deviance
/// explained rises by less than `fdev` or exceeds `devmax` (glmnet's rule).
struct PathStop {
  bool enabled = false;
  double fdev = 1e-5;
  double devmax = 0.999;
  int min_lambdas = 5;
};

/// Warm-started fits along `lambdas` (in order). With `stop` enabled the
/// result may be shorter than `lambdas`.
std::vector<FittedGlm> fit_path(const Matrix& x, std::span<const std::uint8_t> y, double alpha,
                                std::span<const double> lambdas, const GlmOptions& opts = {},
                                const PathStop& stop = {});

struct CvOptions {
  double alpha = 1.0;
  int n_lambda = 100;
  int k_folds = 10;
  GlmOptions glm;
  PathStop stop{true};
};

struct CvResult {
  double lambda_star = 0.0;
  FittedGlm model;
  std::vector<double> lambdas;
  std::vector<double> cv_deviance;  // mean out-of-fold deviance per row, per lambda
};

/// Stratified k-fold assignment: fold id per row, each class dealt round-robin
/// after shuffling.
std::vector<int> stratified_folds(std::span<const std::uint8_t> y, int k, Engine& rng);

/// Picks lambda by k-fold CV deviance and returns the full-data fit at it.
/// Returns std::nullopt when folds cannot hold both classes or the full-data
/// fit does not converge.
std::optional<CvResult> cv_select_lambda(const Matrix& x, std::span<const std::uint8_t> y, const CvOptions& opts,
                                         Engine& rng);

/// Gradient of the summed log-likelihood with respect to (intercept, slopes).
Vector loglik_gradient(const Matrix& x, std::span<const std::uint8_t> y, double intercept, const Vector& beta);

}  // namespace pluto
