#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pluto/tree.hpp"

namespace pluto {

/// Everything a training run depends on besides the data.
struct RunConfig {
  NodeOption option = NodeOption::Simple;
  double alpha = 1.0;
  int m_groups = 5;
  int cv_folds = 10;  // lambda selection inside multiple-option nodes
  int n_lambda = 100;
  double se_theta = 0.0;
  bool bias_correct = false;
  int calib_reps = 100;
  CalibrationGrid calib_grid;
  bool calibrate_per_node = false;
  PurePolicy pure_policy = PurePolicy::Keep;
  std::size_t min_node_size = 0;  // 0: max(30, 5 (K + 1))
  int max_depth = 10;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: hardware concurrency
  int prune_folds = 10;
  GlmOptions glm;

  /// Unknown keys are rejected. Missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  /// Throws ConfigError on the first invalid field.
  void validate() const;

  /// PLUTO_{S|M}[_BC]_{theta}SE, e.g. PLUTO_M_BC_0.5SE.
  std::string model_name() const;

  /// Requires a materialized seed.
  GrowOptions grow_options() const;
};

/// Draws and stores a seed when none is set; returns the seed in use.
std::uint64_t materialize_seed(RunConfig& cfg);

PurePolicy parse_pure_policy(const std::string& s);
NodeOption parse_option(const std::string& s);
/// "lo,hi,steps".
CalibrationGrid parse_calib_grid(const std::string& s);

}  // namespace pluto
