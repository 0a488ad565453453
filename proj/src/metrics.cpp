#include "pluto/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pluto/error.hpp"

namespace pluto {

namespace {

void check_lengths(std::span<const std::uint8_t> y, std::span<const double> p) {
  if (y.size() != p.size()) throw DataError("response and prediction lengths differ");
}

double loss(std::uint8_t y, double p) {
  p = std::clamp(p, kDevianceClip, 1.0 - kDevianceClip);
  return -(y ? std::log(p) : std::log1p(-p));
}

}  // namespace

double dev(std::span<const std::uint8_t> y, std::span<const double> p) {
  check_lengths(y, p);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += loss(y[i], p[i]);
  return 2.0 * s;
}

std::size_t trim_count(std::size_t n, double trim_frac) {
  if (n == 0 || trim_frac <= 0.0) return 0;
  auto k = static_cast<std::size_t>(std::ceil(trim_frac * static_cast<double>(n) - 1e-9));
  if (static_cast<double>(n) * trim_frac < 1.0) k = k > 0 ? k - 1 : 0;  // small sets
  return std::min(k, n);
}

double dev_trimmed(std::span<const std::uint8_t> y, std::span<const double> p, double trim_frac) {
  check_lengths(y, p);
  std::vector<double> losses(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) losses[i] = loss(y[i], p[i]);
  const std::size_t drop = trim_count(y.size(), trim_frac);
  std::sort(losses.begin(), losses.end());
  return 2.0 * std::accumulate(losses.begin(), losses.end() - static_cast<std::ptrdiff_t>(drop), 0.0);
}

double mer(std::span<const std::uint8_t> y, std::span<const double> p, double threshold) {
  check_lengths(y, p);
  if (y.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i) wrong += (p[i] > threshold) != (y[i] == 1);
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double auroc(std::span<const std::uint8_t> y, std::span<const double> p) {
  check_lengths(y, p);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  // Twice the Mann-Whitney count stays integral, so the result is exact.
  std::uint64_t twice_wins = 0, neg_below = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && p[order[j]] == p[order[i]]) {
      (y[order[j]] ? pos : neg) += 1;
      ++j;
    }
    twice_wins += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw DataError("AUROC needs both response classes");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::map<std::string, double> ratio_of_deviance(const std::map<std::string, double>& devs) {
  double top = 0.0;
  for (const auto& [name, d] : devs) top = std::max(top, d);
  std::map<std::string, double> out;
  for (const auto& [name, d] : devs) out[name] = top > 0.0 ? d / top : 1.0;
  return out;
}

nlohmann::json ScoreReport::to_json() const {
  return {{"dev", dev},
          {"dev_trimmed", dev_trimmed},
          {"mer", mer},
          {"auroc", auroc ? nlohmann::json(*auroc) : nlohmann::json(nullptr)},
          {"n", n}};
}

ScoreReport score(std::span<const std::uint8_t> y, std::span<const double> p, double trim_frac) {
  ScoreReport r;
  r.n = y.size();
  r.dev = dev(y, p);
  r.dev_trimmed = dev_trimmed(y, p, trim_frac);
  r.mer = mer(y, p);
  bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  bool has_neg = std::find(y.begin(), y.end(), 0) != y.end();
  if (has_pos && has_neg) r.auroc = auroc(y, p);
  return r;
}

}  // namespace pluto
