// Command-line front end. Everything goes through the C API in pluto.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pluto/pluto.h"

namespace {

using json = nlohmann::json;

struct Failure {
  int code;
  std::string message;
};

void check(pluto_status st) {
  if (st != PLUTO_OK) throw Failure{static_cast<int>(st), pluto_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  pluto_string_free(s);
  return out;
}

struct DatasetPtr {
  pluto_dataset* p = nullptr;
  ~DatasetPtr() { pluto_dataset_free(p); }
};

struct TreePtr {
  pluto_tree* p = nullptr;
  ~TreePtr() { pluto_tree_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{PLUTO_ERR_IO, "cannot open '" + path + "'"};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Failure{PLUTO_ERR_IO, "cannot write '" + path + "'"};
  os << text;
  if (!os) throw Failure{PLUTO_ERR_IO, "write to '" + path + "' failed"};
}

json parse_json_file(const std::string& path, int code) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Failure{code, "'" + path + "' is not valid JSON: " + e.what()};
  }
}

std::string sha256(const std::string& path) {
  char* hex = nullptr;
  check(pluto_file_sha256(path.c_str(), &hex));
  return take(hex);
}

std::uint64_t draw_seed() {
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::fprintf(stderr, "info: no seed given; drew %llu\n", static_cast<unsigned long long>(s));
  return s;
}

/// Records what is needed to rerun a command next to its main output.
void write_manifest(const std::string& out, const std::string& command, const std::vector<std::string>& argv,
                    const json& settings, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json in = json::object(), produced = json::object();
  for (const auto& p : inputs) in[p] = sha256(p);
  for (const auto& p : outputs) produced[p] = sha256(p);
  json m = {{"tool", "pluto"},     {"version", pluto_version()}, {"command", command}, {"argv", argv},
            {"settings", settings}, {"inputs", in},               {"outputs", produced}};
  write_file(out + ".manifest.json", m.dump(2) + "\n");
}

void set_threads(int threads) { check(pluto_set_threads(threads)); }

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data, schema, out, config, dot, report, trace;
  std::string option, pure_policy, calib_grid;
  double se_theta = 0, alpha = 1;
  int m_groups = 5, cv_folds = 10, n_lambda = 100, calib_reps = 100, max_depth = 10, prune_folds = 10, threads = 0;
  std::size_t min_node_size = 0;
  std::uint64_t seed = 0;
  bool bias_correct = false, calibrate_per_node = false;
};

void trace_line(const char* line, void* user) { *static_cast<std::ofstream*>(user) << line << '\n'; }

int run_train(const TrainArgs& a, CLI::App& sub, const std::vector<std::string>& argv) {
  json cfg = a.config.empty() ? json::object() : parse_json_file(a.config, PLUTO_ERR_CONFIG);
  if (!cfg.is_object()) throw Failure{PLUTO_ERR_CONFIG, "config file must hold a JSON object"};
  auto given = [&](const char* flag) { return sub.get_option(flag)->count() > 0; };
  if (given("--option")) cfg["option"] = a.option;
  if (given("--alpha")) cfg["alpha"] = a.alpha;
  if (given("--m-groups")) cfg["m_groups"] = a.m_groups;
  if (given("--cv-folds")) cfg["cv_folds"] = a.cv_folds;
  if (given("--n-lambda")) cfg["n_lambda"] = a.n_lambda;
  if (given("--se-rule")) cfg["se_theta"] = a.se_theta;
  if (a.bias_correct) cfg["bias_correct"] = true;
  if (given("--calib-reps")) cfg["calib_reps"] = a.calib_reps;
  if (given("--calib-grid")) cfg["calib_grid"] = a.calib_grid;
  if (a.calibrate_per_node) cfg["calibrate_per_node"] = true;
  if (given("--pure-policy")) cfg["pure_policy"] = a.pure_policy;
  if (given("--min-node-size")) cfg["min_node_size"] = a.min_node_size;
  if (given("--max-depth")) cfg["max_depth"] = a.max_depth;
  if (given("--prune-folds")) cfg["prune_folds"] = a.prune_folds;
  if (given("--threads")) cfg["threads"] = a.threads;
  if (given("--seed")) cfg["seed"] = a.seed;
  if (!cfg.contains("seed") || cfg["seed"].is_null()) cfg["seed"] = draw_seed();
  cfg.erase("model_name");
  set_threads(cfg.value("threads", 0));

  char* normalized = nullptr;
  check(pluto_config_validate(cfg.dump().c_str(), &normalized));
  cfg = json::parse(take(normalized));
  DatasetPtr data;
  check(pluto_dataset_load(a.data.c_str(), read_file(a.schema).c_str(), 1, &data.p));

  std::ofstream trace_out;
  if (!a.trace.empty()) {
    trace_out.open(a.trace);
    if (!trace_out) throw Failure{PLUTO_ERR_IO, "cannot write '" + a.trace + "'"};
  }
  TreePtr tree;
  char* report_raw = nullptr;
  std::fprintf(stderr, "info: training on %zu rows\n", pluto_dataset_rows(data.p));
  check(pluto_train(data.p, cfg.dump().c_str(), trace_out.is_open() ? trace_line : nullptr, &trace_out, &tree.p,
                    &report_raw));
  json report = json::parse(take(report_raw));

  check(pluto_tree_save(tree.p, a.out.c_str()));
  const std::string dot_path = a.dot.empty() ? a.out + ".dot" : a.dot;
  char* dot = nullptr;
  check(pluto_tree_to_dot(tree.p, &dot));
  write_file(dot_path, take(dot));
  const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
  write_file(report_path, report.dump(2) + "\n");

  std::fprintf(stderr, "%-6s %8s %14s %14s\n", "Tree", "|T|", "kappa", "CV D +- SE");
  const auto chosen = report["chosen_tree"].get<std::size_t>();
  for (const auto& r : report["prune_table"]) {
    const auto k = r["tree"].get<std::size_t>();
    std::fprintf(stderr, "%5zu%s %8zu %14.6g %10.4f +- %.4f\n", k, k == chosen ? "*" : " ",
                 r["leaves"].get<std::size_t>(), r["kappa"].get<double>(), r["cv_deviance"].get<double>(),
                 r["cv_se"].get<double>());
  }
  std::fprintf(stderr, "info: %s with %zu leaves written to %s\n", report["model_name"].get<std::string>().c_str(),
               report["final_leaves"].get<std::size_t>(), a.out.c_str());

  std::vector<std::string> outputs = {a.out, dot_path, report_path};
  if (!a.trace.empty()) {
    trace_out.close();
    outputs.push_back(a.trace);
  }
  std::vector<std::string> inputs = {a.data, a.schema};
  if (!a.config.empty()) inputs.push_back(a.config);
  write_manifest(a.out, "train", argv, cfg, inputs, outputs);
  return 0;
}

// --- predict / score / importance / simulate / export-dot -----------------

std::string format_prob(double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

int run_predict(const std::string& tree_path, const std::string& data_path, const std::string& out,
                const std::vector<std::string>& argv) {
  TreePtr tree;
  check(pluto_tree_load(tree_path.c_str(), &tree.p));
  DatasetPtr data;
  check(pluto_dataset_load_for_tree(data_path.c_str(), tree.p, 0, &data.p));
  std::vector<double> p(pluto_dataset_rows(data.p));
  check(pluto_tree_predict(tree.p, data.p, p.data(), p.size()));
  std::string text = "prob\n";
  for (double v : p) text += format_prob(v) + "\n";
  write_file(out, text);
  write_manifest(out, "predict", argv, json::object(), {tree_path, data_path}, {out});
  return 0;
}

struct ScoreArgs {
  std::string preds, truth, schema, response = "y", positive, column = "prob", out;
  double trim_frac = 0.01;
};

int run_score(const ScoreArgs& a, const std::vector<std::string>& argv) {
  double* p = nullptr;
  std::size_t np = 0;
  check(pluto_csv_column(a.preds.c_str(), a.column.c_str(), &p, &np));
  std::unique_ptr<double, decltype(&pluto_buffer_free)> p_own(p, pluto_buffer_free);
  std::vector<std::uint8_t> y;
  if (!a.schema.empty()) {
    DatasetPtr data;
    check(pluto_dataset_load(a.truth.c_str(), read_file(a.schema).c_str(), 1, &data.p));
    y.resize(pluto_dataset_rows(data.p));
    check(pluto_dataset_response(data.p, y.data(), y.size()));
  } else {
    std::uint8_t* raw = nullptr;
    std::size_t ny = 0;
    check(pluto_csv_binary_column(a.truth.c_str(), a.response.c_str(), a.positive.empty() ? nullptr : a.positive.c_str(),
                                  &raw, &ny));
    y.assign(raw, raw + ny);
    pluto_buffer_free(raw);
  }
  if (y.size() != np)
    throw Failure{PLUTO_ERR_DATA, "predictions have " + std::to_string(np) + " rows but the truth has " +
                                      std::to_string(y.size())};
  char* rep = nullptr;
  check(pluto_score(y.data(), p, np, a.trim_frac, &rep));
  const std::string text = take(rep) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
    std::vector<std::string> inputs = {a.preds, a.truth};
    if (!a.schema.empty()) inputs.push_back(a.schema);
    write_manifest(a.out, "score", argv, {{"trim_frac", a.trim_frac}}, inputs, {a.out});
  }
  return 0;
}

struct ImportanceArgs {
  std::string tree, data, out;
  int reps = 10, threads = 0;
  double trim_frac = 0.01;
  std::uint64_t seed = 0;
  bool without_replacement = false;
};

int run_importance(const ImportanceArgs& a, CLI::App& sub, const std::vector<std::string>& argv) {
  set_threads(a.threads);
  const std::uint64_t seed = sub.get_option("--seed")->count() ? a.seed : draw_seed();
  TreePtr tree;
  check(pluto_tree_load(a.tree.c_str(), &tree.p));
  DatasetPtr data;
  check(pluto_dataset_load_for_tree(a.data.c_str(), tree.p, 1, &data.p));
  json opts = {{"reps", a.reps}, {"with_replacement", !a.without_replacement}, {"trim_frac", a.trim_frac},
               {"seed", seed}};
  char *rep = nullptr, *table = nullptr;
  check(pluto_importance(tree.p, data.p, opts.dump().c_str(), &rep, &table));
  const std::string report = take(rep);
  std::cout << take(table);
  if (!a.out.empty()) {
    write_file(a.out, report + "\n");
    write_manifest(a.out, "importance", argv, opts, {a.tree, a.data}, {a.out});
  }
  return 0;
}

struct SimulateArgs {
  std::string model = "null", option = "simple", calib_grid = "1,2,1000", out;
  int iters = 1000, m_groups = 5, calib_reps = 100, threads = 0;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  bool bias_correct = false;
};

int run_simulate(const SimulateArgs& a, CLI::App& sub, const std::vector<std::string>& argv) {
  set_threads(a.threads);
  const std::uint64_t seed = sub.get_option("--seed")->count() ? a.seed : draw_seed();
  json opts = {{"model", a.model},           {"option", a.option},       {"iterations", a.iters},
               {"n", a.n},                   {"m_groups", a.m_groups},   {"bias_correct", a.bias_correct},
               {"calib_reps", a.calib_reps}, {"calib_grid", a.calib_grid}, {"seed", seed}};
  char *tj = nullptr, *tc = nullptr;
  check(pluto_simulate(opts.dump().c_str(), &tj, &tc));
  const std::string table_json = take(tj), table_csv = take(tc);
  const bool as_json = a.out.size() >= 5 && a.out.substr(a.out.size() - 5) == ".json";
  if (a.out.empty()) {
    std::cout << table_csv;
  } else {
    write_file(a.out, as_json ? table_json + "\n" : table_csv);
    write_manifest(a.out, "simulate", argv, opts, {}, {a.out});
  }
  return 0;
}

int run_export_dot(const std::string& tree_path, const std::string& out, const std::vector<std::string>& argv) {
  TreePtr tree;
  check(pluto_tree_load(tree_path.c_str(), &tree.p));
  char* dot = nullptr;
  check(pluto_tree_to_dot(tree.p, &dot));
  const std::string text = take(dot);
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  write_file(out, text);
  write_manifest(out, "export-dot", argv, json::object(), {tree_path}, {out});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logistic regression trees with unbiased split selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pluto_version()));
  std::vector<std::string> args(argv, argv + argc);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Grow, prune and save a tree");
  train->add_option("--data", ta.data, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--schema", ta.schema, "Column role schema (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", ta.out, "Tree JSON output")->required();
  train->add_option("--config", ta.config, "Run config (JSON); flags override it")->check(CLI::ExistingFile);
  train->add_option("--option", ta.option, "Node model: simple or multiple");
  train->add_option("--alpha", ta.alpha, "Elastic-net mixing parameter");
  train->add_option("--m-groups", ta.m_groups, "Quantile groups M for tests and split points");
  train->add_option("--cv-folds", ta.cv_folds, "Folds for lambda selection");
  train->add_option("--n-lambda", ta.n_lambda, "Length of the lambda path");
  train->add_option("--se-rule", ta.se_theta, "Theta of the theta-SE pruning rule");
  train->add_flag("--bias-correct", ta.bias_correct, "Bootstrap calibration of numeric z-values");
  train->add_option("--calib-reps", ta.calib_reps, "Bootstrap replicates J");
  train->add_option("--calib-grid", ta.calib_grid, "Gamma grid lo,hi,steps");
  train->add_flag("--calibrate-per-node", ta.calibrate_per_node, "Recalibrate gamma at every node");
  train->add_option("--pure-policy", ta.pure_policy, "keep or skip pure children");
  train->add_option("--min-node-size", ta.min_node_size, "Smallest child allowed (0: default)");
  train->add_option("--max-depth", ta.max_depth, "Depth limit");
  train->add_option("--prune-folds", ta.prune_folds, "Folds for pruning CV");
  train->add_option("--seed", ta.seed, "Master seed");
  train->add_option("--threads", ta.threads, "Worker cap (0: all cores)");
  train->add_option("--trace-splits", ta.trace, "Write every node's split tests as JSON lines");
  train->add_option("--dot", ta.dot, "Graphviz output (default <out>.dot)");
  train->add_option("--report", ta.report, "Training report (default <out>.report.json)");

  std::string p_tree, p_data, p_out;
  auto* predict = app.add_subcommand("predict", "Predict probabilities with a saved tree");
  predict->add_option("--tree", p_tree)->required()->check(CLI::ExistingFile);
  predict->add_option("--data", p_data)->required()->check(CLI::ExistingFile);
  predict->add_option("--out", p_out, "Predictions CSV")->required();

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score predictions against labels");
  score->add_option("--preds", sa.preds, "Predictions CSV")->required()->check(CLI::ExistingFile);
  score->add_option("--truth", sa.truth, "CSV holding the labels")->required()->check(CLI::ExistingFile);
  score->add_option("--schema", sa.schema, "Schema naming the response")->check(CLI::ExistingFile);
  score->add_option("--response", sa.response, "Label column when no schema is given");
  score->add_option("--positive", sa.positive, "Label value counted as 1");
  score->add_option("--column", sa.column, "Probability column in the predictions");
  score->add_option("--trim-frac", sa.trim_frac, "Share of worst losses left out of DEV'");
  score->add_option("--out", sa.out, "Report JSON (default stdout)");

  ImportanceArgs ia;
  auto* importance = app.add_subcommand("importance", "Rank variables by resampling test columns");
  importance->add_option("--tree", ia.tree)->required()->check(CLI::ExistingFile);
  importance->add_option("--data", ia.data, "Test CSV")->required()->check(CLI::ExistingFile);
  importance->add_option("--reps", ia.reps, "Resamples per variable");
  importance->add_option("--seed", ia.seed);
  importance->add_option("--trim-frac", ia.trim_frac);
  importance->add_option("--threads", ia.threads);
  importance->add_flag("--permute-without-replacement", ia.without_replacement);
  importance->add_option("--out", ia.out, "Report JSON");

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "Root split-variable selection frequencies");
  simulate->add_option("--model", ma.model, "Null, Jump, Int, Quadratic, Cubic, Linear, LinQuad, LinLin, LinLinQuad");
  simulate->add_option("--option", ma.option);
  simulate->add_option("--iters", ma.iters);
  simulate->add_option("--n", ma.n);
  simulate->add_option("--m-groups", ma.m_groups);
  simulate->add_flag("--bias-correct", ma.bias_correct);
  simulate->add_option("--calib-reps", ma.calib_reps);
  simulate->add_option("--calib-grid", ma.calib_grid);
  simulate->add_option("--seed", ma.seed);
  simulate->add_option("--threads", ma.threads);
  simulate->add_option("--out", ma.out, "CSV, or JSON when the name ends in .json");

  std::string d_tree, d_out;
  auto* dot = app.add_subcommand("export-dot", "Write a saved tree as Graphviz");
  dot->add_option("--tree", d_tree)->required()->check(CLI::ExistingFile);
  dot->add_option("--out", d_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return PLUTO_ERR_CONFIG;
  }

  try {
    if (*train) return run_train(ta, *train, args);
    if (*predict) return run_predict(p_tree, p_data, p_out, args);
    if (*score) return run_score(sa, args);
    if (*importance) return run_importance(ia, *importance, args);
    if (*simulate) return run_simulate(ma, *simulate, args);
    if (*dot) return run_export_dot(d_tree, d_out, args);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  }
  return 0;
}
