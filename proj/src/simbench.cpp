#include "pluto/simbench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "pluto/error.hpp"
#include "pluto/parallel.hpp"

namespace pluto {

const char* sim_model_name(SimModel model) {
  switch (model) {
    case SimModel::Null: return "Null";
    case SimModel::Jump: return "Jump";
    case SimModel::Int: return "Int";
    case SimModel::Quadratic: return "Quadratic";
    case SimModel::Cubic: return "Cubic";
    case SimModel::Linear: return "Linear";
    case SimModel::LinQuad: return "LinQuad";
    case SimModel::LinLin: return "LinLin";
    case SimModel::LinLinQuad: return "LinLinQuad";
  }
  return "?";
}

SimModel parse_sim_model(const std::string& name) {
  std::string key;
  for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "lq") return SimModel::LinQuad;
  if (key == "ll") return SimModel::LinLin;
  if (key == "llq") return SimModel::LinLinQuad;
  if (key == "quad") return SimModel::Quadratic;
  for (SimModel m : kAllSimModels) {
    std::string n = sim_model_name(m);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == key) return m;
  }
  throw ConfigError("unknown simulation model '" + name + "'");
}

double sim_logit(SimModel model, const std::array<double, 5>& x) {
  const double x1 = x[0], x2 = x[1], x3 = x[2];
  switch (model) {
    case SimModel::Null: return 0.0;
    case SimModel::Jump: return 1.0 + 0.7 * (x1 > 0);
    case SimModel::Int: return (0.5 - 0.5 * x3) * (x1 > 0) + (-0.5 + 0.5 * x3) * (x1 < 0);
    case SimModel::Quadratic: return 1.0 + 0.08 * x1 * x1;
    case SimModel::Cubic: return 1.0 + 0.02 * x1 * x1 * x1;
    case SimModel::Linear: return 1.0 + 0.8 * x2;
    case SimModel::LinQuad: return -1.5 + x2 + x3 * x3;
    case SimModel::LinLin: return -1.0 + x2 + x3;
    case SimModel::LinLinQuad: return 1.0 - 0.1 * x1 * x1 + x2 + x3;
  }
  return 0.0;
}

Dataset gen_dataset(SimModel model, std::size_t n, Engine& rng) {
  static constexpr double kX1[] = {-3.0, -1.0, 1.0, 3.0};
  std::uniform_int_distribution<int> four(0, 3);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Column> cols(5);
  for (int j = 0; j < 4; ++j) {
    cols[j].name = "X" + std::to_string(j + 1);
    cols[j].role.kind = RoleKind::NumericBoth;
    cols[j].values.resize(n);
  }
  cols[4].name = "X5";
  cols[4].role.kind = RoleKind::CategoricalSplit;
  cols[4].levels = {"-2", "-1", "1", "2"};
  cols[4].codes.resize(n);
  static constexpr double kX5[] = {-2.0, -1.0, 1.0, 2.0};

  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 5> x;
    x[0] = kX1[four(rng)];
    x[1] = expo(rng);
    x[2] = normal(rng);
    x[3] = normal(rng) + (coin(rng) ? 1.0 : 0.0);
    const int c = four(rng);
    x[4] = kX5[c];
    for (int j = 0; j < 4; ++j) cols[j].values[i] = x[j];
    cols[4].codes[i] = c;
    y[i] = unif(rng) < sigmoid(sim_logit(model, x)) ? 1 : 0;
  }
  return Dataset(std::move(cols), std::move(y), "Y");
}

double SelectionTable::se(std::size_t v) const {
  const double p = frequency(v);
  return std::sqrt(p * (1.0 - p) / iterations);
}

SelectionTable selection_experiment(SimModel model, const SelectionOptions& opts) {
  if (opts.iterations < 1 || opts.n < 1) throw ConfigError("simulation needs iterations >= 1 and n >= 1");
  SelectionTable t;
  t.model = sim_model_name(model);
  const bool simple = opts.model.option == NodeOption::Simple;
  t.option = simple ? "simple" : "multiple";
  if (opts.bias_correct) t.option += "+bbc";
  t.iterations = opts.iterations;
  t.n = opts.n;
  t.variables = {"X1", "X2", "X3", "X4", "X5"};
  t.counts.assign(5, 0);
  if (simple) t.best_regressor_counts.assign(4, 0);

  struct Outcome {
    int variable = -1;
    int regressor = -1;
    double gamma = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Outcome> outcomes(opts.iterations);
  parallel_for(outcomes.size(), [&](std::size_t it) {
    Engine data_rng = derive_engine(opts.seed, 2 * it);
    Engine fit_rng = derive_engine(opts.seed, 2 * it + 1);
    Dataset d = gen_dataset(model, opts.n, data_rng);
    NodeView view = NodeView::all(d);
    Outcome& o = outcomes[it];
    if (view.is_pure()) return;
    SelectionOutcome sel = select_split_variable(view, opts.model, opts.m, fit_rng);
    if (sel.status != NodeStatus::Ok) return;
    std::size_t var = sel.variable;
    if (opts.bias_correct) {
      CalibrationResult cal = calibrate_gamma(view, opts.model, opts.m, opts.calibration, fit_rng);
      o.gamma = cal.gamma_star;
      var = sel.tests[argmax_adjusted_z(d, sel.tests, cal.gamma_star)].variable;
    }
    o.variable = static_cast<int>(var);
    if (simple && sel.model.best_regressor) o.regressor = static_cast<int>(*sel.model.best_regressor);
  });

  for (const Outcome& o : outcomes) {
    if (o.variable < 0) {
      ++t.failures;
      continue;
    }
    ++t.counts[o.variable];
    if (o.regressor >= 0) ++t.best_regressor_counts[o.regressor];
    if (opts.bias_correct) t.gamma_stars.push_back(o.gamma);
  }
  return t;
}

nlohmann::json SelectionTable::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t v = 0; v < variables.size(); ++v) {
    nlohmann::json r = {{"variable", variables[v]}, {"count", counts[v]}, {"frequency", frequency(v)}, {"se", se(v)}};
    if (!best_regressor_counts.empty() && v < best_regressor_counts.size())
      r["best_regressor_frequency"] = static_cast<double>(best_regressor_counts[v]) / iterations;
    rows.push_back(std::move(r));
  }
  nlohmann::json j = {{"model", model},           {"option", option},   {"iterations", iterations},
                      {"n", n},                   {"selection", rows},  {"failures", failures},
                      {"failure_rate", failure_rate()}};
  if (!gamma_stars.empty()) j["gamma_star"] = gamma_stars;
  return j;
}

std::string SelectionTable::to_csv() const {
  std::ostringstream os;
  os << "model,option,variable,count,frequency,se,best_regressor_frequency\n";
  os.precision(6);
  for (std::size_t v = 0; v < variables.size(); ++v) {
    os << model << ',' << option << ',' << variables[v] << ',' << counts[v] << ',' << frequency(v) << ','
       << se(v) << ',';
    if (v < best_regressor_counts.size()) os << static_cast<double>(best_regressor_counts[v]) / iterations;
    os << '\n';
  }
  const double f = failure_rate();
  os << model << ',' << option << ",failed," << failures << ',' << f << ',' << std::sqrt(f * (1 - f) / iterations)
     << ",\n";
  return os.str();
}

}  // namespace pluto
