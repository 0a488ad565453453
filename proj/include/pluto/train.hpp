#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pluto/config.hpp"
#include "pluto/data.hpp"
#include "pluto/tree.hpp"

namespace pluto {

struct TrainReport {
  std::string model_name;
  std::uint64_t seed = 0;
  double gamma_star = 1.0;
  std::size_t n_rows = 0;
  std::size_t full_leaves = 0;
  PruneSequence sequence;
  std::vector<PruneRecord> records;
  std::size_t chosen = 0;  // index into records
  std::size_t final_leaves = 0;
  double resubstitution_dev = 0.0;

  nlohmann::json to_json() const;
  /// Tree number, leaves, CV deviance +- SE; the chosen subtree is starred.
  std::string prune_table() const;
};

struct TrainResult {
  Tree tree;
  TrainReport report;
};

/// Grow, cross-validate the pruning sequence and keep the theta-SE subtree.
/// `cfg` must carry a seed and pass validate().
TrainResult train(const Dataset& data, const Schema& schema, const RunConfig& cfg,
                  std::function<void(const nlohmann::json&)> trace = nullptr);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace pluto
