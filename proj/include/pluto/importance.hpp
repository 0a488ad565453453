#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pluto/metrics.hpp"
#include "pluto/tree.hpp"

namespace pluto {

struct ImportanceOptions {
  int reps = 10;
  bool with_replacement = true;  // false: plain permutation
  double trim_frac = 0.01;
  std::uint64_t seed = 0;
};

/// Deltas are (resampled score - baseline score), averaged over reps. Ranks
/// order the magnitudes, 1 = largest; tied magnitudes share the mean rank.
struct VariableImportance {
  std::string name;
  double delta_dev_trimmed = 0.0;
  double delta_mer = 0.0;
  std::optional<double> delta_auroc;
  double rank_dev_trimmed = 0.0;
  double rank_mer = 0.0;
  std::optional<double> rank_auroc;
  double mean_rank = 0.0;
  double final_rank = 0.0;
};

struct ImportanceReport {
  std::vector<VariableImportance> variables;  // ascending final rank
  ScoreReport baseline;
  int reps = 0;
  bool with_replacement = true;
  bool auroc_used = true;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Average ranks of `values` by descending magnitude.
std::vector<double> magnitude_ranks(const std::vector<double>& values);

ImportanceReport rank_importance(const Tree& tree, const Dataset& test, const ImportanceOptions& opts);

}  // namespace pluto
