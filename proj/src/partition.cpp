#include "pluto/partition.hpp"

#include <algorithm>
#include <map>

#include "pluto/parallel.hpp"

namespace pluto {

bool SplitCriterion::goes_left(const Dataset& data, std::size_t row) const {
  const Column& col = data.column(variable);
  if (kind == Kind::Threshold) return col.values[row] <= delta;
  return std::binary_search(subset.begin(), subset.end(), col.codes[row]);
}

std::size_t default_min_node_size(const Dataset& data) {
  return std::max<std::size_t>(30, 5 * (data.regressor_candidates().size() + 1));
}

std::pair<NodeView, NodeView> partition_rows(const NodeView& view, const SplitCriterion& criterion) {
  NodeView left{view.data, {}}, right{view.data, {}};
  for (auto r : view.rows) (criterion.goes_left(*view.data, r) ? left : right).rows.push_back(r);
  return {std::move(left), std::move(right)};
}

std::vector<SplitCriterion> candidate_splits(const NodeView& view, std::size_t variable, int m) {
  std::vector<SplitCriterion> out;
  const Column& col = view.data->column(variable);
  if (!col.is_categorical()) {
    std::vector<double> values = view.numeric(variable);
    if (values.empty()) return out;
    const double vmax = *std::max_element(values.begin(), values.end());
    for (double cut : quantile_cutpoints(values, m).cuts) {
      if (cut >= vmax) continue;  // empty right child
      out.push_back({SplitCriterion::Kind::Threshold, variable, cut, {}});
    }
    return out;
  }

  // Per-category counts among the node's rows.
  std::map<int, std::pair<double, double>> stats;  // id -> (n, successes)
  for (std::size_t i = 0; i < view.size(); ++i) {
    auto& s = stats[col.codes[view.rows[i]]];
    s.first += 1.0;
    s.second += view.y(i);
  }
  if (stats.size() < 2) return out;
  std::vector<int> order;
  for (const auto& [id, s] : stats) order.push_back(id);
  if (!col.role.ordered) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return stats[a].second / stats[a].first < stats[b].second / stats[b].first;
    });
  }
  for (std::size_t i = 1; i < order.size(); ++i) {
    SplitCriterion c{SplitCriterion::Kind::Subset, variable, 0.0, {order.begin(), order.begin() + i}};
    std::sort(c.subset.begin(), c.subset.end());
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

ChildStatus fit_child(const NodeView& child, const PartitionOptions& opts, Engine& rng, NodeModel& model,
                      double& deviance) {
  if (child.size() < opts.min_node_size || child.size() == 0) return ChildStatus::Failed;
  if (child.is_pure()) {
    if (opts.pure_policy == PurePolicy::Skip) return ChildStatus::Failed;
    model = NodeModel{};
    model.status = NodeStatus::PureNode;
    model.pure_label = child.y(0);
    deviance = 0.0;
    return ChildStatus::Pure;
  }
  model = fit_node_model(child, opts.model, rng);
  if (model.status != NodeStatus::Ok) return ChildStatus::Failed;
  deviance = model.deviance;
  return ChildStatus::Fitted;
}

}  // namespace

SplitEvaluation evaluate_split(const NodeView& view, const SplitCriterion& criterion, const PartitionOptions& opts,
                               Engine& rng) {
  SplitEvaluation ev;
  ev.criterion = criterion;
  std::tie(ev.left, ev.right) = partition_rows(view, criterion);
  double dl = 0.0, dr = 0.0;
  ev.left_status = fit_child(ev.left, opts, rng, ev.left_model, dl);
  if (ev.left_status == ChildStatus::Failed) return ev;
  ev.right_status = fit_child(ev.right, opts, rng, ev.right_model, dr);
  ev.total_deviance = dl + dr;
  return ev;
}

std::optional<SplitEvaluation> best_split(const NodeView& view, std::size_t variable, const PartitionOptions& opts,
                                          Engine& rng) {
  std::vector<SplitCriterion> cands = candidate_splits(view, variable, opts.m);
  if (cands.empty()) return std::nullopt;
  const std::uint64_t master = rng();
  std::vector<SplitEvaluation> evals(cands.size());
  parallel_for(cands.size(), [&](std::size_t i) {
    Engine eng = derive_engine(master, i);
    evals[i] = evaluate_split(view, cands[i], opts, eng);
  });
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].valid()) continue;
    if (!best || evals[i].total_deviance < evals[*best].total_deviance) best = i;
  }
  if (!best) return std::nullopt;
  return std::move(evals[*best]);
}

}  // namespace pluto
