#include "pluto/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pluto/special.hpp"

namespace pluto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpectedFloor = 1e-8;

std::vector<double> fitted_probabilities(const FittedGlm& glm, const Matrix& x) { return predict_probs(glm, x); }

SplitTestResult never_selected(std::size_t variable, int realized) {
  SplitTestResult r;
  r.variable = variable;
  r.realized_columns = realized;
  return r;
}

}  // namespace

Matrix regressor_matrix(const NodeView& view, std::span<const std::size_t> columns) {
  Matrix x(static_cast<Eigen::Index>(view.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& src = view.data->column(columns[j]).values;
    for (std::size_t i = 0; i < view.size(); ++i) x(i, j) = src[view.rows[i]];
  }
  return x;
}

BestSimpleOutcome best_simple_regressor(const NodeView& view, const GlmOptions& glm) {
  BestSimpleOutcome out;
  std::vector<std::uint8_t> y = view.responses();
  if (view.size() == 0) return out;
  if (view.is_pure()) {
    out.status = NodeStatus::PureNode;
    out.model.status = NodeStatus::PureNode;
    out.model.pure_label = y.front();
    return out;
  }

  const auto candidates = view.data->regressor_candidates();
  if (candidates.empty()) {
    FittedGlm fit = fit_irls(Matrix(static_cast<Eigen::Index>(view.size()), 0), y, glm);
    if (!fit.converged) return out;
    out.status = NodeStatus::Ok;
    out.model.status = NodeStatus::Ok;
    out.model.fitted.assign(view.size(), sigmoid(fit.intercept));
    out.model.deviance = fit.deviance;
    out.model.glm = std::move(fit);
    return out;
  }

  std::optional<std::size_t> best;
  FittedGlm best_fit;
  out.deviances.assign(candidates.size(), kInf);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::size_t col[] = {candidates[k]};
    FittedGlm fit = fit_irls(regressor_matrix(view, col), y, glm);
    if (!fit.converged) continue;
    out.deviances[k] = fit.deviance;
    if (!best || fit.deviance < out.deviances[*best]) {
      best = k;
      best_fit = std::move(fit);
    }
  }
  if (!best) return out;

  const std::size_t col[] = {candidates[*best]};
  out.status = NodeStatus::Ok;
  out.model.status = NodeStatus::Ok;
  out.model.regressors = {candidates[*best]};
  out.model.best_regressor = candidates[*best];
  out.model.fitted = fitted_probabilities(best_fit, regressor_matrix(view, col));
  out.model.deviance = best_fit.deviance;
  out.model.glm = std::move(best_fit);
  return out;
}

NodeModel fit_node_model(const NodeView& view, const NodeModelOptions& opts, Engine& rng) {
  if (opts.option == NodeOption::Simple) return best_simple_regressor(view, opts.glm).model;

  NodeModel model;
  if (view.size() == 0) return model;
  std::vector<std::uint8_t> y = view.responses();
  if (view.is_pure()) {
    model.status = NodeStatus::PureNode;
    model.pure_label = y.front();
    return model;
  }
  model.regressors = view.data->regressor_candidates();
  Matrix x = regressor_matrix(view, model.regressors);
  CvOptions cv{opts.alpha, opts.n_lambda, opts.cv_folds, opts.glm};
  auto res = cv_select_lambda(x, y, cv, rng);
  if (!res) return model;
  model.status = NodeStatus::Ok;
  model.lambda_star = res->lambda_star;
  model.glm = std::move(res->model);
  model.fitted = fitted_probabilities(model.glm, x);
  model.deviance = model.glm.deviance;
  return model;
}

SplitTestResult chi2_from_columns(std::span<const double> observed_pos, std::span<const double> expected_pos,
                                  std::span<const double> totals, int df_reduction) {
  SplitTestResult r;
  double chi2 = 0.0;
  int realized = 0;
  for (std::size_t c = 0; c < totals.size(); ++c) {
    if (totals[c] <= 0.0) continue;
    ++realized;
    double e1 = expected_pos[c];
    double e0 = totals[c] - e1;
    double o1 = observed_pos[c];
    double o0 = totals[c] - o1;
    chi2 += (o1 - e1) * (o1 - e1) / std::max(e1, kExpectedFloor);
    chi2 += (o0 - e0) * (o0 - e0) / std::max(e0, kExpectedFloor);
  }
  r.chi2 = chi2;
  r.realized_columns = realized;
  r.df = realized - df_reduction;
  if (realized < 2 || r.df < 1) {
    r.df = std::max(r.df, 1);
    r.p_value = 1.0;
    r.log_p = 0.0;
    return r;
  }
  r.p_value = chi2_sf(chi2, r.df);
  r.log_p = chi2_log_sf(chi2, r.df);
  return r;
}

SplitTestResult adjusted_chi2(const NodeView& view, std::size_t variable, std::span<const double> fitted_probs,
                              bool is_fitted_regressor, int m) {
  const Column& col = view.data->column(variable);
  std::vector<int> group;
  int n_groups = 0;
  if (col.is_categorical()) {
    group = view.codes(variable);
    n_groups = static_cast<int>(col.levels.size());
  } else {
    std::vector<double> values = view.numeric(variable);
    CutpointSet cuts = quantile_cutpoints(values, m);
    if (cuts.cuts.empty()) return never_selected(variable, 1);
    group = discretize(values, cuts);
    n_groups = static_cast<int>(cuts.cuts.size()) + 1;
  }

  std::vector<double> obs(n_groups, 0.0), expct(n_groups, 0.0), tot(n_groups, 0.0);
  for (std::size_t i = 0; i < view.size(); ++i) {
    int g = group[i];
    tot[g] += 1.0;
    obs[g] += view.y(i);
    expct[g] += fitted_probs[i];
  }
  const int reduction = (!col.is_categorical() && is_fitted_regressor) ? 2 : 1;
  SplitTestResult r = chi2_from_columns(obs, expct, tot, reduction);
  r.variable = variable;
  return r;
}

std::vector<SplitTestResult> split_tests(const NodeView& view, std::span<const double> fitted_probs,
                                         std::optional<std::size_t> fitted_regressor, int m) {
  std::vector<SplitTestResult> out;
  for (std::size_t col : view.data->split_candidates())
    out.push_back(adjusted_chi2(view, col, fitted_probs, fitted_regressor && *fitted_regressor == col, m));
  return out;
}

std::size_t argmin_p(std::span<const SplitTestResult> tests) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < tests.size(); ++i)
    if (tests[i].log_p < tests[best].log_p) best = i;
  return best;
}

namespace {

SelectionOutcome finish_selection(const NodeView& view, NodeModel model, std::optional<std::size_t> fitted_regressor,
                                  int m) {
  SelectionOutcome out;
  out.status = model.status;
  if (model.status != NodeStatus::Ok) {
    out.model = std::move(model);
    return out;
  }
  out.tests = split_tests(view, model.fitted, fitted_regressor, m);
  if (out.tests.empty()) {
    out.status = NodeStatus::Failed;
  } else {
    out.variable = out.tests[argmin_p(out.tests)].variable;
  }
  out.model = std::move(model);
  return out;
}

}  // namespace

SelectionOutcome select_split_variable_simple(const NodeView& view, int m, const GlmOptions& glm) {
  BestSimpleOutcome best = best_simple_regressor(view, glm);
  auto reg = best.model.best_regressor;
  return finish_selection(view, std::move(best.model), reg, m);
}

SelectionOutcome select_split_variable_multiple(const NodeView& view, const NodeModelOptions& opts, int m,
                                                Engine& rng) {
  NodeModelOptions multiple = opts;
  multiple.option = NodeOption::Multiple;
  return finish_selection(view, fit_node_model(view, multiple, rng), std::nullopt, m);
}

SelectionOutcome select_split_variable(const NodeView& view, const NodeModelOptions& opts, int m, Engine& rng) {
  if (opts.option == NodeOption::Simple) return select_split_variable_simple(view, m, opts.glm);
  return select_split_variable_multiple(view, opts, m, rng);
}

PearsonResult pearson_chi2_independence(std::span<const double> successes, std::span<const double> failures) {
  PearsonResult r;
  double row1 = 0.0, row0 = 0.0;
  int realized = 0;
  for (std::size_t c = 0; c < successes.size(); ++c) {
    if (successes[c] + failures[c] <= 0.0) continue;
    row1 += successes[c];
    row0 += failures[c];
    ++realized;
  }
  const double total = row1 + row0;
  r.df = std::max(realized - 1, 0);
  if (realized < 2 || row1 <= 0.0 || row0 <= 0.0) return r;
  for (std::size_t c = 0; c < successes.size(); ++c) {
    double col = successes[c] + failures[c];
    if (col <= 0.0) continue;
    double e1 = row1 * col / total;
    double e0 = row0 * col / total;
    r.chi2 += (successes[c] - e1) * (successes[c] - e1) / e1 + (failures[c] - e0) * (failures[c] - e0) / e0;
  }
  r.p_value = chi2_sf(r.chi2, r.df);
  return r;
}

}  // namespace pluto
