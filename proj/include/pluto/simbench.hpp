#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pluto/calibrate.hpp"

namespace pluto {

enum class SimModel { Null, Jump, Int, Quadratic, Cubic, Linear, LinQuad, LinLin, LinLinQuad };

inline constexpr std::array<SimModel, 9> kAllSimModels = {
    SimModel::Null,   SimModel::Jump,    SimModel::Int,    SimModel::Quadratic, SimModel::Cubic,
    SimModel::Linear, SimModel::LinQuad, SimModel::LinLin, SimModel::LinLinQuad};

const char* sim_model_name(SimModel model);
/// Case-insensitive; accepts the short forms lq, ll and llq.
SimModel parse_sim_model(const std::string& name);

/// logit(p) as a function of (X1, ..., X5).
double sim_logit(SimModel model, const std::array<double, 5>& x);

/// X1..X4 numeric (split and fit), X5 categorical with levels -2, -1, 1, 2.
Dataset gen_dataset(SimModel model, std::size_t n, Engine& rng);

struct SelectionOptions {
  NodeModelOptions model;  // option, alpha, CV settings
  int iterations = 1000;
  std::size_t n = 500;
  int m = 5;
  bool bias_correct = false;
  CalibrationOptions calibration;
  std::uint64_t seed = 0;
};

struct SelectionTable {
  std::string model;
  std::string option;  // simple, multiple or multiple+bbc
  int iterations = 0;
  std::size_t n = 0;
  std::vector<std::string> variables;  // X1..X5
  std::vector<int> counts;
  int failures = 0;
  std::vector<int> best_regressor_counts;  // simple option: X1..X4
  std::vector<double> gamma_stars;         // bias correction only, one per iteration

  double frequency(std::size_t v) const { return static_cast<double>(counts[v]) / iterations; }
  double failure_rate() const { return static_cast<double>(failures) / iterations; }
  /// Binomial standard error sqrt(p (1 - p) / iterations).
  double se(std::size_t v) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Root-node split-variable selection repeated on fresh samples.
SelectionTable selection_experiment(SimModel model, const SelectionOptions& opts);

}  // namespace pluto
