#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pluto/split.hpp"

namespace pluto {

enum class PurePolicy { Keep, Skip };

/// Routes a row left iff value <= delta (numeric) or code in subset
/// (categorical).
struct SplitCriterion {
  enum class Kind { Threshold, Subset };
  Kind kind = Kind::Threshold;
  std::size_t variable = 0;
  double delta = 0.0;
  std::vector<int> subset;  // sorted category ids

  bool goes_left(const Dataset& data, std::size_t row) const;
};

enum class ChildStatus { Fitted, Pure, Failed };

struct SplitEvaluation {
  SplitCriterion criterion;
  double total_deviance = 0.0;
  ChildStatus left_status = ChildStatus::Failed;
  ChildStatus right_status = ChildStatus::Failed;
  NodeView left;
  NodeView right;
  NodeModel left_model;
  NodeModel right_model;

  bool valid() const { return left_status != ChildStatus::Failed && right_status != ChildStatus::Failed; }
};

struct PartitionOptions {
  NodeModelOptions model;
  int m = 5;
  PurePolicy pure_policy = PurePolicy::Keep;
  std::size_t min_node_size = 30;
};

/// max(30, 5 * (regressor candidates + 1)).
std::size_t default_min_node_size(const Dataset& data);

std::pair<NodeView, NodeView> partition_rows(const NodeView& view, const SplitCriterion& criterion);

/// Numeric: deduplicated quantile thresholds that leave both sides nonempty.
/// Ordinal: prefixes of the level order. Nominal: prefixes of the order of
/// per-category success proportion (ties by category id).
std::vector<SplitCriterion> candidate_splits(const NodeView& view, std::size_t variable, int m);

SplitEvaluation evaluate_split(const NodeView& view, const SplitCriterion& criterion, const PartitionOptions& opts,
                               Engine& rng);

/// Smallest total deviance among valid evaluations, earliest candidate on
/// ties; std::nullopt when none is valid.
std::optional<SplitEvaluation> best_split(const NodeView& view, std::size_t variable, const PartitionOptions& opts,
                                          Engine& rng);

}  // namespace pluto
