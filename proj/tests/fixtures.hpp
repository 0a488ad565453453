#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pluto/data.hpp"
#include "pluto/glm.hpp"

namespace fixture {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pluto_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path.string();
}

inline pluto::Column numeric(const std::string& name, std::vector<double> values,
                             pluto::RoleKind kind = pluto::RoleKind::NumericBoth) {
  pluto::Column c;
  c.name = name;
  c.role.kind = kind;
  c.values = std::move(values);
  return c;
}

inline pluto::Column categorical(const std::string& name, std::vector<int> codes, std::vector<std::string> levels) {
  pluto::Column c;
  c.name = name;
  c.role.kind = pluto::RoleKind::CategoricalSplit;
  c.codes = std::move(codes);
  c.levels = std::move(levels);
  return c;
}

// Two numeric regressors, one noise column and a three-level factor; the
// logit bends at x1 = 0 and depends on the factor.
inline pluto::Dataset piecewise(std::size_t n, std::uint64_t seed, double factor_effect = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> three(0, 2);
  std::vector<double> x1(n), x2(n), x3(n);
  std::vector<int> g(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = normal(rng);
    x2[i] = normal(rng);
    x3[i] = normal(rng);
    g[i] = three(rng);
    double eta = x1[i] > 0 ? 1.5 * x2[i] + 0.5 : -1.5 * x2[i] - 0.5;
    if (g[i] == 2) eta += factor_effect;
    y[i] = unif(rng) < pluto::sigmoid(eta) ? 1 : 0;
  }
  std::vector<pluto::Column> cols{numeric("x1", x1), numeric("x2", x2), numeric("x3", x3),
                                  categorical("g", g, {"a", "b", "c"})};
  return pluto::Dataset(std::move(cols), std::move(y), "y");
}

inline const char* kPiecewiseSchema =
    R"({"x1": "numeric", "x2": "numeric", "x3": "numeric", "g": "categorical", "y": "response"})";

}  // namespace fixture
