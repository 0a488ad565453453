#include "pluto/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "pluto/error.hpp"
#include "pluto/metrics.hpp"
#include "pluto/parallel.hpp"

namespace pluto {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A tree's splits and models resolved against one dataset's columns.
struct BoundNode {
  std::size_t column = 0;
  bool categorical = false;
  double delta = 0.0;
  std::vector<int> subset;  // sorted ids in this dataset
  std::vector<std::size_t> regressors;
};

class Router {
 public:
  Router(const Tree& tree, const Dataset& data) : tree_(tree), data_(data) {
    std::vector<std::string> missing;
    auto column_of = [&](const std::string& name) -> std::size_t {
      auto j = data.find(name);
      if (!j) {
        if (std::find(missing.begin(), missing.end(), name) == missing.end()) missing.push_back(name);
        return 0;
      }
      return *j;
    };
    for (const auto& [id, node] : tree.nodes) {
      BoundNode b;
      if (node.split) {
        b.column = column_of(node.split->variable);
        b.categorical = node.split->categorical;
        b.delta = node.split->delta;
        if (b.categorical && missing.empty()) {
          const Column& col = data.column(b.column);
          if (!col.is_categorical())
            throw DataError("column '" + col.name + "' is numeric but the tree splits on it as categorical");
          for (const auto& label : node.split->subset) {
            auto it = std::find(col.levels.begin(), col.levels.end(), label);
            if (it != col.levels.end()) b.subset.push_back(static_cast<int>(it - col.levels.begin()));
          }
          std::sort(b.subset.begin(), b.subset.end());
        }
      }
      if (!node.pure)
        for (const auto& r : node.regressors) b.regressors.push_back(column_of(r));
      bound_.emplace(id, std::move(b));
    }
    if (!missing.empty()) {
      std::string msg = "data is missing columns used by the tree:";
      for (const auto& m : missing) msg += " '" + m + "'";
      throw DataError(msg);
    }
  }

  /// Leaf reached by `row` when nodes for which `is_cut(id)` are leaves.
  template <class IsCut>
  std::int64_t leaf(std::size_t row, IsCut&& is_cut) const {
    std::int64_t id = 1;
    for (;;) {
      const TreeNode& node = tree_.nodes.at(id);
      if (node.is_leaf() || is_cut(id)) return id;
      const BoundNode& b = bound_.at(id);
      bool left;
      if (b.categorical)
        left = std::binary_search(b.subset.begin(), b.subset.end(), data_.column(b.column).codes[row]);
      else
        left = data_.column(b.column).values[row] <= b.delta;
      id = 2 * id + (left ? 0 : 1);
    }
  }

  double prob(std::int64_t id, std::size_t row) const {
    const TreeNode& node = tree_.nodes.at(id);
    if (node.pure) return node.pure_label ? 1.0 - kPureLeafClip : kPureLeafClip;
    const BoundNode& b = bound_.at(id);
    std::vector<double> x(b.regressors.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = data_.column(b.regressors[j]).values[row];
    return predict_prob(node.model, x);
  }

 private:
  const Tree& tree_;
  const Dataset& data_;
  std::map<std::int64_t, BoundNode> bound_;
};

void collect_subtree(const Tree& tree, std::int64_t id, std::vector<std::int64_t>& out) {
  out.push_back(id);
  const TreeNode& n = tree.nodes.at(id);
  if (n.is_leaf()) return;
  collect_subtree(tree, 2 * id, out);
  collect_subtree(tree, 2 * id + 1, out);
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

nlohmann::json model_json(const TreeNode& node) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t j = 0; j < node.regressors.size(); ++j)
    coefs.push_back({{"name", node.regressors[j]}, {"value", node.model.coefficients.at(j)}});
  nlohmann::json m = {{"intercept", node.model.intercept},
                      {"coefficients", coefs},
                      {"converged", node.model.converged},
                      {"deviance", node.model.deviance}};
  if (node.model.penalty) {
    m["alpha"] = node.model.penalty->alpha;
    m["lambda"] = node.model.penalty->lambda;
  }
  return m;
}

}  // namespace

std::vector<std::int64_t> Tree::leaf_ids() const {
  std::vector<std::int64_t> out;
  for (const auto& [id, n] : nodes)
    if (n.is_leaf()) out.push_back(id);
  return out;
}

double Tree::deviance() const {
  double d = 0.0;
  for (const auto& [id, n] : nodes)
    if (n.is_leaf()) d += n.deviance;
  return d;
}

std::vector<double> Tree::predict(const Dataset& data) const {
  std::vector<std::size_t> rows(data.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return predict(data, rows);
}

std::vector<double> Tree::predict(const Dataset& data, std::span<const std::size_t> rows) const {
  Router router(*this, data);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = router.prob(router.leaf(rows[i], [](std::int64_t) { return false; }), rows[i]);
  return out;
}

std::vector<std::int64_t> Tree::route(const Dataset& data) const {
  Router router(*this, data);
  std::vector<std::int64_t> out(data.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = router.leaf(i, [](std::int64_t) { return false; });
  return out;
}

Tree Tree::collapsed(const std::vector<std::int64_t>& collapse) const {
  Tree out = *this;
  for (std::int64_t id : collapse) {
    auto it = out.nodes.find(id);
    if (it == out.nodes.end() || it->second.is_leaf()) continue;
    std::vector<std::int64_t> sub;
    collect_subtree(out, id, sub);
    for (std::size_t k = 1; k < sub.size(); ++k) out.nodes.erase(sub[k]);
    it->second.split.reset();
  }
  return out;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json doc;
  doc["format"] = "pluto-tree";
  doc["version"] = kFormatVersion;
  doc["option"] = option;
  doc["model_name"] = model_name;
  doc["schema"] = schema;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [id, n] : nodes) {
    nlohmann::json j = {{"id", id},     {"depth", n.depth},       {"n_rows", n.n_rows},
                        {"n_pos", n.n_pos}, {"deviance", n.deviance}, {"pure", n.pure}};
    if (n.pure)
      j["label"] = n.pure_label;
    else
      j["model"] = model_json(n);
    if (n.split) {
      if (n.split->categorical)
        j["split"] = {{"variable", n.split->variable}, {"kind", "subset"}, {"subset", n.split->subset}};
      else
        j["split"] = {{"variable", n.split->variable}, {"kind", "threshold"}, {"delta", n.split->delta}};
    }
    list.push_back(std::move(j));
  }
  doc["nodes"] = std::move(list);
  return doc;
}

Tree Tree::from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "pluto-tree") throw IoError("not a tree document");
    int version = doc.at("version").get<int>();
    if (version != kFormatVersion)
      throw IoError("unsupported tree format version " + std::to_string(version) + " (expected " +
                    std::to_string(kFormatVersion) + ")");
    Tree t;
    t.option = doc.at("option").get<std::string>();
    t.model_name = doc.value("model_name", "");
    t.schema = doc.at("schema");
    for (const auto& j : doc.at("nodes")) {
      TreeNode n;
      n.id = j.at("id").get<std::int64_t>();
      n.depth = j.at("depth").get<int>();
      n.n_rows = j.at("n_rows").get<std::size_t>();
      n.n_pos = j.at("n_pos").get<std::size_t>();
      n.deviance = j.at("deviance").get<double>();
      n.pure = j.at("pure").get<bool>();
      if (n.pure) {
        n.pure_label = j.at("label").get<std::uint8_t>();
      } else {
        const auto& m = j.at("model");
        n.model.intercept = m.at("intercept").get<double>();
        n.model.converged = m.at("converged").get<bool>();
        n.model.deviance = m.at("deviance").get<double>();
        for (const auto& c : m.at("coefficients")) {
          n.regressors.push_back(c.at("name").get<std::string>());
          n.model.coefficients.push_back(c.at("value").get<double>());
        }
        if (m.contains("lambda")) {
          n.model.penalty = PenaltySpec{m.at("alpha").get<double>(), m.at("lambda").get<double>()};
          n.lambda = n.model.penalty->lambda;
        }
      }
      if (j.contains("split")) {
        const auto& s = j.at("split");
        SplitRule r;
        r.variable = s.at("variable").get<std::string>();
        r.categorical = s.at("kind").get<std::string>() == "subset";
        if (r.categorical)
          r.subset = s.at("subset").get<std::vector<std::string>>();
        else
          r.delta = s.at("delta").get<double>();
        n.split = std::move(r);
      }
      t.nodes.emplace(n.id, std::move(n));
    }
    if (!t.nodes.count(1)) throw IoError("tree has no root node");
    for (const auto& [id, n] : t.nodes)
      if (n.split && (!t.nodes.count(2 * id) || !t.nodes.count(2 * id + 1)))
        throw IoError("node " + std::to_string(id) + " splits but lacks children");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed tree document: ") + e.what());
  }
}

std::string Tree::to_dot() const { return pluto::to_dot(*this); }

std::string to_dot(const Tree& tree) {
  std::ostringstream os;
  os << "digraph pluto {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& [id, n] : tree.nodes) {
    std::string label = "Node " + std::to_string(id) + "\n";
    if (n.split) {
      if (n.split->categorical) {
        label += n.split->variable + " in {";
        for (std::size_t k = 0; k < n.split->subset.size(); ++k)
          label += (k ? ", " : "") + n.split->subset[k];
        label += "}";
      } else {
        label += n.split->variable + " <= " + format_number(n.split->delta);
      }
      os << "  n" << id << " [label=\"" << dot_escape(label) << "\"];\n";
    } else {
      label += "y=1: " + std::to_string(n.n_pos) + "  y=0: " + std::to_string(n.n_rows - n.n_pos) + "\n";
      if (n.pure) {
        label += "pure (" + std::to_string(n.pure_label) + ")";
      } else {
        label += "logit = " + format_number(n.model.intercept);
        for (std::size_t j = 0; j < n.regressors.size(); ++j) {
          double c = n.model.coefficients[j];
          if (c == 0.0) continue;
          label += (c < 0 ? " - " : " + ") + format_number(std::abs(c)) + " " + n.regressors[j];
        }
      }
      const char* color = 2 * n.n_pos > n.n_rows ? "green" : "red";
      os << "  n" << id << " [shape=ellipse, color=" << color << ", label=\"" << dot_escape(label) << "\"];\n";
    }
  }
  for (const auto& [id, n] : tree.nodes) {
    if (!n.split) continue;
    os << "  n" << id << " -> n" << 2 * id << " [label=\"yes\"];\n";
    os << "  n" << id << " -> n" << 2 * id + 1 << " [label=\"no\"];\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Growth

namespace {

class Grower {
 public:
  Grower(const GrowOptions& opts, const Dataset& data) : opts_(opts), data_(data), popts_(opts.partition) {
    if (popts_.min_node_size == 0) popts_.min_node_size = default_min_node_size(data);
  }

  GrowResult run(const NodeView& root) {
    GrowResult res;
    Tree& t = res.tree;
    t.option = opts_.partition.model.option == NodeOption::Simple ? "simple" : "multiple";
    if (root.size() == 0) throw DataError("cannot grow a tree on zero rows");

    Engine root_rng = derive_engine(opts_.seed, 0);
    NodeModel model;
    if (root.is_pure()) {
      model.status = NodeStatus::PureNode;
      model.pure_label = root.y(0);
    } else {
      model = fit_node_model(root, popts_.model, root_rng);
      if (model.status != NodeStatus::Ok) throw ConvergenceError("root node model did not converge");
      if (opts_.bias_correct) {
        Engine calib_rng = derive_engine(opts_.seed, ~std::uint64_t{0});
        gamma_ = calibrate_gamma(root, popts_.model, popts_.m, opts_.calibration, calib_rng).gamma_star;
      }
    }
    res.gamma_star = gamma_;
    grow_node(t, root, 1, 0, std::move(model));
    return res;
  }

 private:
  void grow_node(Tree& t, const NodeView& view, std::int64_t id, int depth, NodeModel model) {
    TreeNode node;
    node.id = id;
    node.depth = depth;
    node.n_rows = view.size();
    node.n_pos = view.n_positive();
    if (model.status == NodeStatus::PureNode) {
      node.pure = true;
      node.pure_label = model.pure_label;
      node.deviance = 0.0;
      t.nodes.emplace(id, std::move(node));
      return;
    }
    node.model = model.glm;
    for (auto c : model.regressors) node.regressors.push_back(data_.column(c).name);
    node.lambda = model.lambda_star;
    node.deviance = model.deviance;

    auto& stored = t.nodes.emplace(id, std::move(node)).first->second;
    if (depth >= opts_.max_depth || view.size() < 2 * popts_.min_node_size) return;
    if (id > (std::numeric_limits<std::int64_t>::max() >> 2)) return;

    Engine rng = derive_engine(opts_.seed, static_cast<std::uint64_t>(id));
    std::vector<SplitTestResult> all = split_tests(view, model.fitted, model.best_regressor, popts_.m);
    std::vector<SplitTestResult> tests;
    for (const auto& r : all)
      if (r.realized_columns >= 2) tests.push_back(r);
    if (tests.empty()) return;

    std::size_t pick;
    if (opts_.bias_correct) {
      double gamma = gamma_;
      if (opts_.calibrate_per_node && id != 1)
        gamma = calibrate_gamma(view, popts_.model, popts_.m, opts_.calibration, rng).gamma_star;
      pick = argmax_adjusted_z(data_, tests, gamma);
    } else {
      pick = argmin_p(tests);
    }
    const std::size_t variable = tests[pick].variable;
    if (opts_.trace) trace(id, view, all, variable);

    auto best = best_split(view, variable, popts_, rng);
    if (!best) return;

    SplitRule rule;
    const Column& col = data_.column(variable);
    rule.variable = col.name;
    rule.categorical = col.is_categorical();
    rule.delta = best->criterion.delta;
    for (int code : best->criterion.subset) rule.subset.push_back(col.levels[code]);
    stored.split = std::move(rule);

    grow_node(t, best->left, 2 * id, depth + 1, std::move(best->left_model));
    grow_node(t, best->right, 2 * id + 1, depth + 1, std::move(best->right_model));
  }

  void trace(std::int64_t id, const NodeView& view, const std::vector<SplitTestResult>& tests,
             std::size_t chosen) const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : tests)
      rows.push_back({{"variable", data_.column(r.variable).name},
                      {"chi2", r.chi2},
                      {"df", r.df},
                      {"p_value", r.p_value},
                      {"log_p", r.log_p},
                      {"realized_columns", r.realized_columns}});
    opts_.trace({{"node", id}, {"n", view.size()}, {"selected", data_.column(chosen).name}, {"tests", rows}});
  }

  const GrowOptions& opts_;
  const Dataset& data_;
  PartitionOptions popts_;
  double gamma_ = 1.0;
};

}  // namespace

GrowResult grow(const NodeView& root, const GrowOptions& opts) { return Grower(opts, *root.data).run(root); }

GrowResult grow(const Dataset& data, const GrowOptions& opts) { return grow(NodeView::all(data), opts); }

// ---------------------------------------------------------------------------
// Pruning

namespace {

struct BranchStats {
  double deviance = 0.0;
  std::size_t leaves = 0;
};

class WeakestLink {
 public:
  explicit WeakestLink(const Tree& t) : tree_(t) {}

  bool is_leaf(std::int64_t id) const { return tree_.nodes.at(id).is_leaf() || cut_.count(id); }

  BranchStats stats(std::int64_t id) const {
    if (is_leaf(id)) return {tree_.nodes.at(id).deviance, 1};
    BranchStats l = stats(2 * id), r = stats(2 * id + 1);
    return {l.deviance + r.deviance, l.leaves + r.leaves};
  }

  // (node, g) for every internal node of the current subtree.
  void links(std::int64_t id, std::vector<std::pair<std::int64_t, double>>& out) const {
    if (is_leaf(id)) return;
    BranchStats b = stats(id);
    out.emplace_back(id, (tree_.nodes.at(id).deviance - b.deviance) / static_cast<double>(b.leaves - 1));
    links(2 * id, out);
    links(2 * id + 1, out);
  }

  void cut(std::int64_t id, double kappa, std::map<std::int64_t, double>& at) {
    cut_.insert(id);
    std::vector<std::int64_t> sub;
    collect_subtree(tree_, id, sub);
    for (auto s : sub)
      if (!tree_.nodes.at(s).is_leaf() && !at.count(s)) at[s] = kappa;
  }

 private:
  const Tree& tree_;
  std::set<std::int64_t> cut_;
};

}  // namespace

PruneSequence prune_sequence(const Tree& tree) {
  PruneSequence seq;
  WeakestLink wl(tree);
  auto record = [&](double kappa) {
    BranchStats b = wl.stats(1);
    if (!seq.kappas.empty() && kappa <= seq.kappas.back()) {
      seq.leaves.back() = b.leaves;
      seq.deviance.back() = b.deviance;
      return;
    }
    seq.kappas.push_back(kappa);
    seq.leaves.push_back(b.leaves);
    seq.deviance.push_back(b.deviance);
  };

  // Branches that do not lower the deviance are gone at kappa = 0.
  for (;;) {
    std::vector<std::pair<std::int64_t, double>> links;
    wl.links(1, links);
    bool any = false;
    for (auto [id, g] : links) {
      if (g <= 1e-12 * std::max(1.0, std::abs(tree.nodes.at(id).deviance))) {
        wl.cut(id, 0.0, seq.collapse_at);
        any = true;
        break;  // ancestors' links change; recompute
      }
    }
    if (!any) break;
  }
  record(0.0);

  for (;;) {
    std::vector<std::pair<std::int64_t, double>> links;
    wl.links(1, links);
    if (links.empty()) break;
    double gmin = kInf;
    for (auto [id, g] : links) gmin = std::min(gmin, g);
    const double kappa = std::max(gmin, seq.kappas.back());
    const double tol = 1e-10 * std::max(1.0, std::abs(gmin));
    for (auto [id, g] : links)
      if (g <= gmin + tol && !wl.is_leaf(id)) wl.cut(id, kappa, seq.collapse_at);
    record(kappa);
  }
  return seq;
}

std::vector<std::int64_t> PruneSequence::collapsed_ids(double kappa) const {
  std::vector<std::int64_t> out;
  for (const auto& [id, k] : collapse_at)
    if (k <= kappa) out.push_back(id);
  return out;
}

Tree PruneSequence::subtree(const Tree& full, double kappa) const { return full.collapsed(collapsed_ids(kappa)); }

std::vector<double> PruneSequence::predict(const Tree& full, double kappa, const Dataset& data,
                                           std::span<const std::size_t> rows) const {
  Router router(full, data);
  auto is_cut = [&](std::int64_t id) {
    auto it = collapse_at.find(id);
    return it != collapse_at.end() && it->second <= kappa;
  };
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = router.prob(router.leaf(rows[i], is_cut), rows[i]);
  return out;
}

std::vector<PruneRecord> cv_prune(const Dataset& data, const GrowOptions& opts, const PruneSequence& sequence,
                                  int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("pruning needs at least 2 cross-validation folds");
  const std::size_t s = sequence.kappas.size();
  std::vector<double> probe(s);
  for (std::size_t k = 0; k < s; ++k)
    probe[k] = k + 1 < s ? std::sqrt(sequence.kappas[k] * sequence.kappas[k + 1]) : kInf;

  Engine rng = derive_engine(seed, 0x5eedf01dULL);
  std::vector<std::uint8_t> y(data.response().begin(), data.response().end());
  std::vector<int> fold = stratified_folds(y, folds, rng);

  std::vector<std::vector<double>> devs(folds);
  parallel_for(static_cast<std::size_t>(folds), [&](std::size_t f) {
    NodeView train{&data, {}};
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == static_cast<int>(f) ? test : train.rows).push_back(i);
    if (test.empty()) return;
    GrowOptions fopts = opts;
    fopts.seed = derive_seed(seed, f + 1);
    fopts.trace = nullptr;
    GrowResult grown;
    try {
      grown = grow(train, fopts);
    } catch (const ConvergenceError& e) {
      std::fprintf(stderr, "warning: skipping pruning fold %zu: %s\n", f + 1, e.what());
      return;
    }
    PruneSequence fseq = prune_sequence(grown.tree);
    std::vector<std::uint8_t> ytest(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) ytest[i] = y[test[i]];
    devs[f].resize(s);
    for (std::size_t k = 0; k < s; ++k) devs[f][k] = dev(ytest, fseq.predict(grown.tree, probe[k], data, test));
  });

  std::vector<PruneRecord> out(s);
  for (std::size_t k = 0; k < s; ++k) {
    PruneRecord& r = out[k];
    r.kappa = sequence.kappas[k];
    r.subtree_leaves = sequence.leaves[k];
    for (const auto& d : devs)
      if (!d.empty()) r.fold_devs.push_back(d[k]);
    const double n = static_cast<double>(r.fold_devs.size());
    if (n == 0) {
      r.cv_dev_mean = kInf;
      continue;
    }
    double mean = 0.0;
    for (double d : r.fold_devs) mean += d;
    mean /= n;
    double ss = 0.0;
    for (double d : r.fold_devs) ss += (d - mean) * (d - mean);
    r.cv_dev_mean = mean;
    r.cv_dev_se = n > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return out;
}

std::size_t apply_se_rule(std::span<const PruneRecord> records, double theta) {
  if (records.empty()) throw ConfigError("no pruning records");
  if (theta < 0.0) throw ConfigError("SE-rule theta must be non-negative");
  std::size_t best = 0;
  for (std::size_t k = 1; k < records.size(); ++k)
    if (records[k].cv_dev_mean < records[best].cv_dev_mean) best = k;
  const double threshold = records[best].cv_dev_mean + theta * records[best].cv_dev_se;
  std::size_t pick = best;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].cv_dev_mean > threshold) continue;
    if (records[k].subtree_leaves < records[pick].subtree_leaves) pick = k;
  }
  return pick;
}

}  // namespace pluto
