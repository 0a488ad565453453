#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pluto/calibrate.hpp"
#include "pluto/partition.hpp"

namespace pluto {

/// Split stored by variable name and category label so a tree can route rows
/// of any dataset with compatible columns.
struct SplitRule {
  std::string variable;
  bool categorical = false;
  double delta = 0.0;
  std::vector<std::string> subset;  // labels routed left
};

/// Node ids are heap-ordered: root 1, children 2k and 2k+1.
struct TreeNode {
  std::int64_t id = 1;
  int depth = 0;
  std::optional<SplitRule> split;  // leaf iff empty
  bool pure = false;
  std::uint8_t pure_label = 0;
  FittedGlm model;
  std::vector<std::string> regressors;  // names, in coefficient order
  double lambda = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_pos = 0;
  double deviance = 0.0;

  bool is_leaf() const { return !split.has_value(); }
};

/// Probability reported for pure leaves: clipped away from 0 and 1.
inline constexpr double kPureLeafClip = 1e-6;

class Tree {
 public:
  std::map<std::int64_t, TreeNode> nodes;
  nlohmann::json schema;  // schema the tree was trained with
  std::string option = "simple";
  std::string model_name;

  static constexpr int kFormatVersion = 1;

  const TreeNode& root() const { return nodes.at(1); }
  std::vector<std::int64_t> leaf_ids() const;
  std::size_t n_leaves() const { return leaf_ids().size(); }
  /// Sum of leaf deviances.
  double deviance() const;

  /// One probability per row of `data`. Unseen categories go right.
  std::vector<double> predict(const Dataset& data) const;
  std::vector<double> predict(const Dataset& data, std::span<const std::size_t> rows) const;
  /// Leaf id reached by each row.
  std::vector<std::int64_t> route(const Dataset& data) const;

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& doc);
  std::string to_dot() const;

  /// Copy keeping only the nodes present when every id in `collapse` is
  /// turned into a leaf.
  Tree collapsed(const std::vector<std::int64_t>& collapse) const;
};

struct GrowOptions {
  PartitionOptions partition;  // min_node_size 0 means default_min_node_size
  int max_depth = 10;
  bool bias_correct = false;
  bool calibrate_per_node = false;
  CalibrationOptions calibration;
  std::uint64_t seed = 0;
  /// Receives one JSON object per split node with every split test.
  std::function<void(const nlohmann::json&)> trace;
};

struct GrowResult {
  Tree tree;
  double gamma_star = 1.0;
};

/// Grows a tree on the rows of `root`. Throws ConvergenceError when the root
/// model cannot be fitted.
GrowResult grow(const NodeView& root, const GrowOptions& opts);
GrowResult grow(const Dataset& data, const GrowOptions& opts);

/// Nested subtrees from weakest-link pruning. Entry k is optimal for
/// kappa in [kappas[k], kappas[k+1]).
struct PruneSequence {
  std::vector<double> kappas;
  std::vector<std::size_t> leaves;
  std::vector<double> deviance;  // training deviance of each subtree
  std::map<std::int64_t, double> collapse_at;  // internal node -> kappa at which it becomes a leaf

  /// Minimizer of D(T) + kappa |T|.
  Tree subtree(const Tree& full, double kappa) const;
  std::vector<std::int64_t> collapsed_ids(double kappa) const;
  /// Predictions of subtree(full, kappa) without materializing it.
  std::vector<double> predict(const Tree& full, double kappa, const Dataset& data,
                              std::span<const std::size_t> rows) const;
};

PruneSequence prune_sequence(const Tree& tree);

struct PruneRecord {
  double kappa = 0.0;
  std::size_t subtree_leaves = 0;
  double cv_dev_mean = 0.0;
  double cv_dev_se = 0.0;
  std::vector<double> fold_devs;
};

/// Cross-validated deviance of every subtree of `sequence`. Fold trees are
/// pruned at the geometric midpoints of consecutive kappas.
std::vector<PruneRecord> cv_prune(const Dataset& data, const GrowOptions& opts, const PruneSequence& sequence,
                                  int folds, std::uint64_t seed);

/// Index of the record with the fewest leaves whose mean CV deviance is within
/// theta standard errors of the minimum.
std::size_t apply_se_rule(std::span<const PruneRecord> records, double theta);

/// Graphviz rendering: internal nodes show the criterion sending rows left.
std::string to_dot(const Tree& tree);

}  // namespace pluto
