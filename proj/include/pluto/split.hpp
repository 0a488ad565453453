#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pluto/data.hpp"
#include "pluto/glm.hpp"

namespace pluto {

enum class NodeOption { Simple, Multiple };

enum class NodeStatus { Ok, PureNode, Failed };

/// Lack-of-fit test of one split candidate against a node model.
struct SplitTestResult {
  std::size_t variable = 0;  // column index in the dataset
  double chi2 = 0.0;
  int df = 1;
  double p_value = 1.0;
  double log_p = 0.0;  // compared instead of p_value so tiny tails never tie
  int realized_columns = 0;
};

struct NodeModelOptions {
  NodeOption option = NodeOption::Simple;
  double alpha = 1.0;
  int n_lambda = 100;
  int cv_folds = 10;
  GlmOptions glm;
};

/// The logistic model fitted in a node and its fitted probabilities.
struct NodeModel {
  NodeStatus status = NodeStatus::Failed;
  FittedGlm glm;
  std::vector<std::size_t> regressors;        // dataset columns, in coefficient order
  std::optional<std::size_t> best_regressor;  // simple option only
  std::vector<double> fitted;                 // per node row
  double deviance = 0.0;
  double lambda_star = 0.0;
  std::uint8_t pure_label = 0;  // when status == PureNode
};

/// Regressor matrix (rows of the view x the given columns).
Matrix regressor_matrix(const NodeView& view, std::span<const std::size_t> columns);

struct BestSimpleOutcome {
  NodeStatus status = NodeStatus::Failed;
  NodeModel model;
  std::vector<double> deviances;  // per regressor candidate, +inf when the fit failed
};

/// Fits logit(p) = b0 + b1 X_k for every regressor candidate and keeps the
/// smallest deviance among converged fits.
BestSimpleOutcome best_simple_regressor(const NodeView& view, const GlmOptions& glm = {});

/// Node model for either option. `rng` drives the CV folds of the multiple
/// option and is unused by the simple one.
NodeModel fit_node_model(const NodeView& view, const NodeModelOptions& opts, Engine& rng);

/// Chi-squared statistic of observed successes against expected ones per
/// table column; empty columns are dropped. `df_reduction` is 1, or 2 when
/// the grouping variable is the fitted regressor.
SplitTestResult chi2_from_columns(std::span<const double> observed_pos, std::span<const double> expected_pos,
                                  std::span<const double> totals, int df_reduction);

SplitTestResult adjusted_chi2(const NodeView& view, std::size_t variable, std::span<const double> fitted_probs,
                              bool is_fitted_regressor, int m);

/// Tests every split candidate of the view against `fitted_probs`.
std::vector<SplitTestResult> split_tests(const NodeView& view, std::span<const double> fitted_probs,
                                         std::optional<std::size_t> fitted_regressor, int m);

/// Index into `tests` of the smallest p-value; ties go to the earliest.
std::size_t argmin_p(std::span<const SplitTestResult> tests);

struct SelectionOutcome {
  NodeStatus status = NodeStatus::Failed;
  std::size_t variable = 0;
  NodeModel model;
  std::vector<SplitTestResult> tests;
};

SelectionOutcome select_split_variable_simple(const NodeView& view, int m, const GlmOptions& glm = {});

SelectionOutcome select_split_variable_multiple(const NodeView& view, const NodeModelOptions& opts, int m,
                                                Engine& rng);

/// Dispatches on opts.option.
SelectionOutcome select_split_variable(const NodeView& view, const NodeModelOptions& opts, int m, Engine& rng);

struct PearsonResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Classical test of independence on a 2 x C table of counts.
PearsonResult pearson_chi2_independence(std::span<const double> successes, std::span<const double> failures);

}  // namespace pluto
