#include "pluto/config.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "pluto/error.hpp"

namespace pluto {

PurePolicy parse_pure_policy(const std::string& s) {
  if (s == "keep") return PurePolicy::Keep;
  if (s == "skip") return PurePolicy::Skip;
  throw ConfigError("pure_policy must be 'keep' or 'skip', got '" + s + "'");
}

NodeOption parse_option(const std::string& s) {
  if (s == "simple" || s == "S") return NodeOption::Simple;
  if (s == "multiple" || s == "M") return NodeOption::Multiple;
  throw ConfigError("option must be 'simple' or 'multiple', got '" + s + "'");
}

CalibrationGrid parse_calib_grid(const std::string& s) {
  CalibrationGrid g;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%lf,%lf,%d%c", &g.lo, &g.hi, &g.steps, &tail) != 3)
    throw ConfigError("calibration grid must look like 'lo,hi,steps', got '" + s + "'");
  return g;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "option",      "alpha",         "m_groups",      "cv_folds",      "n_lambda",      "se_theta",
      "bias_correct", "calib_reps",   "calib_grid",    "calibrate_per_node", "pure_policy", "min_node_size",
      "max_depth",   "seed",          "threads",       "prune_folds",   "max_irls_iter", "coef_tol",
      "cd_tol",      "model_name"};
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  try {
    if (doc.contains("option")) c.option = parse_option(doc["option"].get<std::string>());
    c.alpha = doc.value("alpha", c.alpha);
    c.m_groups = doc.value("m_groups", c.m_groups);
    c.cv_folds = doc.value("cv_folds", c.cv_folds);
    c.n_lambda = doc.value("n_lambda", c.n_lambda);
    c.se_theta = doc.value("se_theta", c.se_theta);
    c.bias_correct = doc.value("bias_correct", c.bias_correct);
    c.calib_reps = doc.value("calib_reps", c.calib_reps);
    if (doc.contains("calib_grid")) {
      const auto& g = doc["calib_grid"];
      if (g.is_string()) {
        c.calib_grid = parse_calib_grid(g.get<std::string>());
      } else {
        c.calib_grid.lo = g.at("lo").get<double>();
        c.calib_grid.hi = g.at("hi").get<double>();
        c.calib_grid.steps = g.at("steps").get<int>();
      }
    }
    c.calibrate_per_node = doc.value("calibrate_per_node", c.calibrate_per_node);
    if (doc.contains("pure_policy")) c.pure_policy = parse_pure_policy(doc["pure_policy"].get<std::string>());
    c.min_node_size = doc.value("min_node_size", c.min_node_size);
    c.max_depth = doc.value("max_depth", c.max_depth);
    if (doc.contains("seed") && !doc["seed"].is_null()) c.seed = doc["seed"].get<std::uint64_t>();
    c.threads = doc.value("threads", c.threads);
    c.prune_folds = doc.value("prune_folds", c.prune_folds);
    c.glm.max_irls_iter = doc.value("max_irls_iter", c.glm.max_irls_iter);
    c.glm.coef_tol = doc.value("coef_tol", c.glm.coef_tol);
    c.glm.cd_tol = doc.value("cd_tol", c.glm.cd_tol);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"option", option == NodeOption::Simple ? "simple" : "multiple"},
                      {"alpha", alpha},
                      {"m_groups", m_groups},
                      {"cv_folds", cv_folds},
                      {"n_lambda", n_lambda},
                      {"se_theta", se_theta},
                      {"bias_correct", bias_correct},
                      {"calib_reps", calib_reps},
                      {"calib_grid", {{"lo", calib_grid.lo}, {"hi", calib_grid.hi}, {"steps", calib_grid.steps}}},
                      {"calibrate_per_node", calibrate_per_node},
                      {"pure_policy", pure_policy == PurePolicy::Keep ? "keep" : "skip"},
                      {"min_node_size", min_node_size},
                      {"max_depth", max_depth},
                      {"threads", threads},
                      {"prune_folds", prune_folds},
                      {"max_irls_iter", glm.max_irls_iter},
                      {"coef_tol", glm.coef_tol},
                      {"cd_tol", glm.cd_tol},
                      {"model_name", model_name()}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(se_theta >= 0.0) || !std::isfinite(se_theta)) fail("se_theta must be a finite number >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (m_groups < 2) fail("m_groups must be at least 2");
  if (cv_folds < 2) fail("cv_folds must be at least 2");
  if (prune_folds < 2) fail("prune_folds must be at least 2");
  if (n_lambda < 1) fail("n_lambda must be positive");
  if (calib_reps < 1) fail("calib_reps must be positive");
  if (calib_grid.steps < 2 || !(calib_grid.hi > calib_grid.lo)) fail("calib_grid needs hi > lo and steps >= 2");
  if (max_depth < 0) fail("max_depth must be non-negative");
  if (threads < 0) fail("threads must be non-negative");
  if (glm.max_irls_iter < 1) fail("max_irls_iter must be positive");
  if (!(glm.coef_tol > 0.0) || !(glm.cd_tol > 0.0)) fail("tolerances must be positive");
}

std::string RunConfig::model_name() const {
  std::ostringstream os;
  os << "PLUTO_" << (option == NodeOption::Simple ? "S" : "M") << (bias_correct ? "_BC" : "") << '_' << se_theta
     << "SE";
  return os.str();
}

GrowOptions RunConfig::grow_options() const {
  if (!seed) throw ConfigError("seed not materialized");
  GrowOptions g;
  g.partition.model.option = option;
  g.partition.model.alpha = alpha;
  g.partition.model.n_lambda = n_lambda;
  g.partition.model.cv_folds = cv_folds;
  g.partition.model.glm = glm;
  g.partition.m = m_groups;
  g.partition.pure_policy = pure_policy;
  g.partition.min_node_size = min_node_size;
  g.max_depth = max_depth;
  g.bias_correct = bias_correct;
  g.calibrate_per_node = calibrate_per_node;
  g.calibration.reps = calib_reps;
  g.calibration.grid = calib_grid;
  g.seed = *seed;
  return g;
}

std::uint64_t materialize_seed(RunConfig& cfg) {
  if (!cfg.seed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::fprintf(stderr, "info: drew seed %llu\n", static_cast<unsigned long long>(*cfg.seed));
  }
  return *cfg.seed;
}

}  // namespace pluto
