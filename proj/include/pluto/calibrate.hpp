#pragma once

#include <span>
#include <vector>

#include "pluto/split.hpp"

namespace pluto {

struct CalibrationGrid {
  double lo = 1.0;
  double hi = 2.0;
  int steps = 1000;
};

struct CalibrationOptions {
  int reps = 100;  // J
  CalibrationGrid grid;
};

/// Multiplier applied to the z-values of numeric split candidates, estimated
/// from response-resampled null data.
struct CalibrationResult {
  double gamma_star = 1.0;
  std::vector<double> gammas;
  std::vector<double> pi;  // fraction of replicates choosing a numeric variable, per gamma
  double target = 1.0;     // b / (a + b)
  int reps = 0;
  int n_categorical = 0;  // a
  int n_numeric = 0;      // b
  bool clamped_top = false;
};

/// z-values of each test, computed in log space.
std::vector<double> z_values(std::span<const SplitTestResult> tests);

CalibrationResult calibrate_gamma(const NodeView& view, const NodeModelOptions& opts, int m,
                                  const CalibrationOptions& calib, Engine& rng);

/// Index into `tests` of the largest z after numeric z-values are scaled by
/// `gamma`; ties go to the earliest.
std::size_t argmax_adjusted_z(const Dataset& data, std::span<const SplitTestResult> tests, double gamma);

/// Uncalibrated selection followed by the z-value adjustment. The returned
/// outcome's `variable` reflects the adjusted choice.
SelectionOutcome select_split_variable_calibrated(const NodeView& view, const NodeModelOptions& opts, int m,
                                                  double gamma_star, Engine& rng);

}  // namespace pluto
