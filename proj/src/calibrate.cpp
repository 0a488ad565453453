#include "pluto/calibrate.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>

#include "pluto/error.hpp"
#include "pluto/parallel.hpp"
#include "pluto/special.hpp"

namespace pluto {

std::vector<double> z_values(std::span<const SplitTestResult> tests) {
  std::vector<double> z(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) z[i] = z_from_log_p(tests[i].log_p);
  return z;
}

std::size_t argmax_adjusted_z(const Dataset& data, std::span<const SplitTestResult> tests, double gamma) {
  std::vector<double> z = z_values(tests);
  std::size_t best = 0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (!data.column(tests[i].variable).is_categorical()) z[i] *= gamma;
    if (z[i] > z[best]) best = i;
  }
  return best;
}

CalibrationResult calibrate_gamma(const NodeView& view, const NodeModelOptions& opts, int m,
                                  const CalibrationOptions& calib, Engine& rng) {
  if (calib.reps < 1 || calib.grid.steps < 2 || !(calib.grid.hi > calib.grid.lo))
    throw ConfigError("calibration needs reps >= 1, steps >= 2 and hi > lo");
  CalibrationResult res;
  res.reps = calib.reps;
  for (std::size_t col : view.data->split_candidates()) {
    if (view.data->column(col).is_categorical())
      ++res.n_categorical;
    else
      ++res.n_numeric;
  }
  const int steps = calib.grid.steps;
  res.gammas.resize(steps);
  for (int g = 0; g < steps; ++g)
    res.gammas[g] = calib.grid.lo + (calib.grid.hi - calib.grid.lo) * g / (steps - 1);
  if (res.n_categorical == 0 || res.n_numeric == 0 || view.is_pure()) {
    res.pi.assign(steps, 1.0);
    return res;
  }
  res.target = static_cast<double>(res.n_numeric) / (res.n_numeric + res.n_categorical);

  const std::vector<std::uint8_t> y = view.responses();
  const std::uint64_t master = rng();
  // Per replicate: largest numeric and largest categorical z; NaN if the
  // replicate produced no tests.
  std::vector<double> zn(calib.reps), zc(calib.reps);
  parallel_for(static_cast<std::size_t>(calib.reps), [&](std::size_t j) {
    Engine eng = derive_engine(master, j);
    std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
    std::vector<std::uint8_t> resp(view.data->response().begin(), view.data->response().end());
    for (int attempt = 0;; ++attempt) {
      std::size_t pos = 0;
      for (std::size_t i = 0; i < view.size(); ++i) {
        resp[view.rows[i]] = y[pick(eng)];
        pos += resp[view.rows[i]];
      }
      if (pos != 0 && pos != view.size()) break;
      if (attempt > 1000) throw DataError("bootstrap responses stay pure; cannot calibrate");
    }
    Dataset boot = view.data->with_response(resp);
    NodeView bview{&boot, view.rows};
    SelectionOutcome sel = select_split_variable(bview, opts, m, eng);
    zn[j] = zc[j] = std::numeric_limits<double>::quiet_NaN();
    if (sel.status != NodeStatus::Ok) return;
    std::vector<double> z = z_values(sel.tests);
    double best_n = 0.0, best_c = 0.0;
    for (std::size_t i = 0; i < sel.tests.size(); ++i) {
      if (boot.column(sel.tests[i].variable).is_categorical())
        best_c = std::max(best_c, z[i]);
      else
        best_n = std::max(best_n, z[i]);
    }
    zn[j] = best_n;
    zc[j] = best_c;
  });

  int used = 0;
  std::vector<int> wins(steps, 0);
  for (int j = 0; j < calib.reps; ++j) {
    if (std::isnan(zn[j])) continue;
    ++used;
    for (int g = 0; g < steps; ++g)
      if (res.gammas[g] * zn[j] >= zc[j]) ++wins[g];
  }
  res.pi.assign(steps, 1.0);
  if (used == 0) return res;
  for (int g = 0; g < steps; ++g) res.pi[g] = static_cast<double>(wins[g]) / used;
  assert(std::is_sorted(res.pi.begin(), res.pi.end()));

  if (res.pi.front() >= res.target) {
    res.gamma_star = res.gammas.front();
    return res;
  }
  if (res.pi.back() < res.target) {
    res.gamma_star = res.gammas.back();
    res.clamped_top = true;
    std::fprintf(stderr, "warning: calibration target %.4f not reached on the gamma grid; using %.4f\n",
                 res.target, res.gamma_star);
    return res;
  }
  for (int g = 1; g < steps; ++g) {
    if (res.pi[g] < res.target) continue;
    double lo_pi = res.pi[g - 1];
    double frac = (res.target - lo_pi) / (res.pi[g] - lo_pi);
    res.gamma_star = res.gammas[g - 1] + frac * (res.gammas[g] - res.gammas[g - 1]);
    break;
  }
  return res;
}

SelectionOutcome select_split_variable_calibrated(const NodeView& view, const NodeModelOptions& opts, int m,
                                                  double gamma_star, Engine& rng) {
  SelectionOutcome sel = select_split_variable(view, opts, m, rng);
  if (sel.status == NodeStatus::Ok && !sel.tests.empty())
    sel.variable = sel.tests[argmax_adjusted_z(*view.data, sel.tests, gamma_star)].variable;
  return sel;
}

}  // namespace pluto
