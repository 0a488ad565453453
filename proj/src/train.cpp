#include "pluto/train.hpp"

#include <cstdio>
#include <sstream>

#include "pluto/error.hpp"
#include "pluto/metrics.hpp"

namespace pluto {

TrainResult train(const Dataset& data, const Schema& schema, const RunConfig& cfg,
                  std::function<void(const nlohmann::json&)> trace) {
  cfg.validate();
  if (!cfg.seed) throw ConfigError("training needs a seed");
  if (!data.has_response() || data.n_rows() == 0) throw DataError("training data has no rows");

  GrowOptions opts = cfg.grow_options();
  GrowOptions main_opts = opts;
  main_opts.trace = std::move(trace);
  GrowResult grown = grow(data, main_opts);

  TrainResult out;
  TrainReport& rep = out.report;
  rep.model_name = cfg.model_name();
  rep.seed = *cfg.seed;
  rep.gamma_star = grown.gamma_star;
  rep.n_rows = data.n_rows();
  rep.full_leaves = grown.tree.n_leaves();
  rep.sequence = prune_sequence(grown.tree);

  if (rep.sequence.kappas.size() > 1) {
    rep.records = cv_prune(data, opts, rep.sequence, cfg.prune_folds, derive_seed(*cfg.seed, 0xc0ffee));
    rep.chosen = apply_se_rule(rep.records, cfg.se_theta);
  } else {
    PruneRecord only;
    only.subtree_leaves = rep.sequence.leaves[0];
    rep.records.push_back(only);
    rep.chosen = 0;
  }

  out.tree = rep.sequence.subtree(grown.tree, rep.sequence.kappas[rep.chosen]);
  out.tree.schema = schema.to_json();
  out.tree.model_name = rep.model_name;
  rep.final_leaves = out.tree.n_leaves();
  rep.resubstitution_dev = dev(data.response(), out.tree.predict(data));
  return out;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t k = 0; k < records.size(); ++k) {
    const PruneRecord& r = records[k];
    table.push_back({{"tree", k + 1},
                     {"kappa", sequence.kappas[k]},
                     {"leaves", r.subtree_leaves},
                     {"train_deviance", sequence.deviance[k]},
                     {"cv_deviance", r.cv_dev_mean},
                     {"cv_se", r.cv_dev_se},
                     {"folds", r.fold_devs.size()}});
  }
  return {{"model_name", model_name},
          {"seed", seed},
          {"gamma_star", gamma_star},
          {"n_rows", n_rows},
          {"full_leaves", full_leaves},
          {"final_leaves", final_leaves},
          {"chosen_tree", chosen + 1},
          {"resubstitution_dev", resubstitution_dev},
          {"prune_table", table}};
}

std::string TrainReport::prune_table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%6s %8s %14s %12s %14s\n", "Tree", "|T|", "kappa", "D(T)", "CV D +- SE");
  os << line;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const PruneRecord& r = records[k];
    std::snprintf(line, sizeof line, "%5zu%s %8zu %14.6g %12.4f %10.4f +- %.4f\n", k + 1, k == chosen ? "*" : " ",
                  r.subtree_leaves, sequence.kappas[k], sequence.deviance[k], r.cv_dev_mean, r.cv_dev_se);
    os << line;
  }
  return os.str();
}

}  // namespace pluto
