#include "pluto/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pluto/error.hpp"
#include "pluto/parallel.hpp"

namespace pluto {

namespace {

// Average 1-based ranks of `keys` in ascending order.
std::vector<double> average_ranks(const std::vector<double>& keys) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<double> ranks(keys.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && keys[order[j + 1]] == keys[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

template <class T>
std::vector<T> resample(const std::vector<T>& v, bool with_replacement, Engine& rng) {
  std::vector<T> out(v.size());
  if (v.empty()) return out;
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    for (auto& x : out) x = v[pick(rng)];
  } else {
    out = v;
    std::shuffle(out.begin(), out.end(), rng);
  }
  return out;
}

}  // namespace

std::vector<double> magnitude_ranks(const std::vector<double>& values) {
  std::vector<double> keys(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) keys[i] = -std::abs(values[i]);
  return average_ranks(keys);
}

ImportanceReport rank_importance(const Tree& tree, const Dataset& test, const ImportanceOptions& opts) {
  if (opts.reps < 1) throw ConfigError("importance needs reps >= 1");
  if (!test.has_response()) throw DataError("importance needs a response column in the test data");
  if (test.n_rows() == 0) throw DataError("importance needs a nonempty test set");

  ImportanceReport rep;
  rep.reps = opts.reps;
  rep.with_replacement = opts.with_replacement;
  const auto y = test.response();
  rep.baseline = score(y, tree.predict(test), opts.trim_frac);
  rep.auroc_used = rep.baseline.auroc.has_value();
  if (!rep.auroc_used) std::fprintf(stderr, "warning: test data has one class; AUROC left out of the ranking\n");

  std::vector<std::size_t> vars;
  for (std::size_t j = 0; j < test.n_columns(); ++j)
    if (test.column(j).role.kind != RoleKind::Excluded) vars.push_back(j);

  const std::size_t reps = static_cast<std::size_t>(opts.reps);
  std::vector<ScoreReport> scores(vars.size() * reps);
  parallel_for(scores.size(), [&](std::size_t t) {
    const std::size_t v = t / reps, r = t % reps;
    Engine eng = derive_engine(derive_seed(opts.seed, v), r);
    const Column& col = test.column(vars[v]);
    Dataset shuffled = col.is_categorical()
                           ? test.with_codes(vars[v], resample(col.codes, opts.with_replacement, eng))
                           : test.with_values(vars[v], resample(col.values, opts.with_replacement, eng));
    scores[t] = score(y, tree.predict(shuffled), opts.trim_frac);
  });

  std::vector<VariableImportance> out(vars.size());
  std::vector<double> d_dev(vars.size()), d_mer(vars.size()), d_auc(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    double dev_sum = 0.0, mer_sum = 0.0, auc_sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const ScoreReport& s = scores[v * reps + r];
      dev_sum += s.dev_trimmed;
      mer_sum += s.mer;
      if (rep.auroc_used) auc_sum += *s.auroc;
    }
    const double n = static_cast<double>(reps);
    out[v].name = test.column(vars[v]).name;
    out[v].delta_dev_trimmed = d_dev[v] = dev_sum / n - rep.baseline.dev_trimmed;
    out[v].delta_mer = d_mer[v] = mer_sum / n - rep.baseline.mer;
    if (rep.auroc_used) out[v].delta_auroc = d_auc[v] = auc_sum / n - *rep.baseline.auroc;
  }

  std::vector<double> r_dev = magnitude_ranks(d_dev), r_mer = magnitude_ranks(d_mer), r_auc;
  if (rep.auroc_used) r_auc = magnitude_ranks(d_auc);
  std::vector<double> mean(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    out[v].rank_dev_trimmed = r_dev[v];
    out[v].rank_mer = r_mer[v];
    double sum = r_dev[v] + r_mer[v];
    if (rep.auroc_used) {
      out[v].rank_auroc = r_auc[v];
      sum += r_auc[v];
    }
    out[v].mean_rank = mean[v] = sum / (rep.auroc_used ? 3.0 : 2.0);
  }
  std::vector<double> final_rank = average_ranks(mean);
  for (std::size_t v = 0; v < vars.size(); ++v) out[v].final_rank = final_rank[v];
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.final_rank < b.final_rank; });
  rep.variables = std::move(out);
  return rep;
}

nlohmann::json ImportanceReport::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variables) {
    nlohmann::json j = {{"name", v.name},
                        {"delta_dev_trimmed", v.delta_dev_trimmed},
                        {"delta_mer", v.delta_mer},
                        {"rank_dev_trimmed", v.rank_dev_trimmed},
                        {"rank_mer", v.rank_mer},
                        {"mean_rank", v.mean_rank},
                        {"final_rank", v.final_rank}};
    if (v.delta_auroc) {
      j["delta_auroc"] = *v.delta_auroc;
      j["rank_auroc"] = *v.rank_auroc;
    }
    vars.push_back(std::move(j));
  }
  return {{"baseline", baseline.to_json()},
          {"reps", reps},
          {"resampling", with_replacement ? "with_replacement" : "permutation"},
          {"auroc_used", auroc_used},
          {"variables", vars}};
}

std::string ImportanceReport::to_table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %12s %5s %12s %5s %12s %5s %9s %6s\n", "Variable", "dDEV'", "rank",
                "dMER", "rank", "dAUROC", "rank", "mean", "final");
  os << line;
  for (const auto& v : variables) {
    char auc[32] = "-", auc_rank[16] = "-";
    if (v.delta_auroc) {
      std::snprintf(auc, sizeof auc, "%+.5f", *v.delta_auroc);
      std::snprintf(auc_rank, sizeof auc_rank, "%g", *v.rank_auroc);
    }
    std::snprintf(line, sizeof line, "%-24s %+12.4f %5g %+12.5f %5g %12s %5s %9.3f %6g\n", v.name.c_str(),
                  v.delta_dev_trimmed, v.rank_dev_trimmed, v.delta_mer, v.rank_mer, auc, auc_rank, v.mean_rank,
                  v.final_rank);
    os << line;
  }
  return os.str();
}

}  // namespace pluto
