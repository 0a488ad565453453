#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace pluto {

inline constexpr double kDevianceClip = 1e-12;

/// -2 sum [y log p + (1-y) log(1-p)] with p clipped to [1e-12, 1-1e-12].
double dev(std::span<const std::uint8_t> y, std::span<const double> p);

/// Number of worst per-observation losses excluded by dev_trimmed.
std::size_t trim_count(std::size_t n, double trim_frac = 0.01);

/// Deviance over all but the worst trim_count(n) observations.
double dev_trimmed(std::span<const std::uint8_t> y, std::span<const double> p, double trim_frac = 0.01);

/// Fraction misclassified; p > threshold predicts 1.
double mer(std::span<const std::uint8_t> y, std::span<const double> p, double threshold = 0.5);

/// Probability a random positive scores above a random negative, ties 1/2.
/// Throws DataError when only one class is present.
double auroc(std::span<const std::uint8_t> y, std::span<const double> p);

std::map<std::string, double> ratio_of_deviance(const std::map<std::string, double>& devs);

struct ScoreReport {
  double dev = 0.0;
  double dev_trimmed = 0.0;
  double mer = 0.0;
  std::optional<double> auroc;  // absent for single-class data
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

ScoreReport score(std::span<const std::uint8_t> y, std::span<const double> p, double trim_frac = 0.01);

}  // namespace pluto
