#include "pluto/pluto.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "pluto/error.hpp"
#include "pluto/importance.hpp"
#include "pluto/metrics.hpp"
#include "pluto/parallel.hpp"
#include "pluto/simbench.hpp"
#include "pluto/train.hpp"

struct pluto_dataset {
  pluto::Dataset data;
  pluto::Schema schema;
};

struct pluto_tree {
  pluto::Tree tree;
};

namespace {

thread_local std::string g_last_error;

pluto_status fail(pluto_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class Fn>
pluto_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PLUTO_OK;
  } catch (const pluto::Error& e) {
    return fail(static_cast<pluto_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PLUTO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PLUTO_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw pluto::ConfigError(std::string("invalid ") + what + " JSON: " + e.what());
  }
}

std::size_t header_index(const std::vector<std::string>& header, const std::string& column, const char* path) {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == column) return j;
  throw pluto::DataError(std::string("'") + path + "' has no column '" + column + "'");
}

}  // namespace

#define PLUTO_REQUIRE(cond, msg) \
  if (!(cond)) return fail(PLUTO_ERR_ARGUMENT, msg)

extern "C" {

const char* pluto_version(void) { return PLUTO_VERSION; }

const char* pluto_last_error(void) { return g_last_error.c_str(); }

void pluto_string_free(char* s) { std::free(s); }

void pluto_buffer_free(void* p) { std::free(p); }

pluto_status pluto_set_threads(int n) {
  PLUTO_REQUIRE(n >= 0, "thread count must be non-negative");
  pluto::set_max_threads(n);
  return PLUTO_OK;
}

pluto_status pluto_dataset_load(const char* csv_path, const char* schema_json, int require_response,
                                pluto_dataset** out) {
  PLUTO_REQUIRE(csv_path && schema_json && out, "null argument");
  return guarded([&] {
    auto ds = std::make_unique<pluto_dataset>();
    ds->schema = pluto::Schema::from_json(parse_json(schema_json, "schema"));
    ds->data = pluto::load_csv(csv_path, ds->schema, pluto::CsvOptions{require_response != 0});
    *out = ds.release();
  });
}

pluto_status pluto_dataset_load_for_tree(const char* csv_path, const pluto_tree* tree, int require_response,
                                         pluto_dataset** out) {
  PLUTO_REQUIRE(csv_path && tree && out, "null argument");
  return guarded([&] {
    auto ds = std::make_unique<pluto_dataset>();
    ds->schema = pluto::Schema::from_json(tree->tree.schema);
    ds->data = pluto::load_csv(csv_path, ds->schema, pluto::CsvOptions{require_response != 0});
    *out = ds.release();
  });
}

void pluto_dataset_free(pluto_dataset* data) { delete data; }

size_t pluto_dataset_rows(const pluto_dataset* data) { return data ? data->data.n_rows() : 0; }

int pluto_dataset_has_response(const pluto_dataset* data) {
  return data && data->data.n_rows() > 0 && !data->data.response().empty() ? 1 : 0;
}

pluto_status pluto_dataset_response(const pluto_dataset* data, uint8_t* out, size_t n) {
  PLUTO_REQUIRE(data && (out || n == 0), "null argument");
  PLUTO_REQUIRE(n == data->data.n_rows(), "buffer length does not match the row count");
  PLUTO_REQUIRE(n == 0 || !data->data.response().empty(), "dataset has no response column");
  auto y = data->data.response();
  std::copy(y.begin(), y.end(), out);
  return PLUTO_OK;
}

pluto_status pluto_csv_column(const char* csv_path, const char* column, double** values, size_t* n) {
  PLUTO_REQUIRE(csv_path && column && values && n, "null argument");
  return guarded([&] {
    auto records = pluto::read_csv_records(csv_path);
    if (records.empty()) throw pluto::DataError(std::string("'") + csv_path + "' has no header");
    const std::size_t j = header_index(records[0], column, csv_path);
    const std::size_t rows = records.size() - 1;
    double* buf = static_cast<double*>(std::malloc(std::max<std::size_t>(rows, 1) * sizeof(double)));
    if (!buf) throw std::bad_alloc();
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& rec = records[i + 1];
      char* end = nullptr;
      const char* cell = j < rec.size() ? rec[j].c_str() : "";
      double v = std::strtod(cell, &end);
      if (!*cell || *end) {
        std::free(buf);
        throw pluto::DataError("row " + std::to_string(i + 1) + ", column '" + column + "': '" + cell +
                               "' is not a number");
      }
      buf[i] = v;
    }
    *values = buf;
    *n = rows;
  });
}

pluto_status pluto_csv_binary_column(const char* csv_path, const char* column, const char* positive_label,
                                     uint8_t** values, size_t* n) {
  PLUTO_REQUIRE(csv_path && column && values && n, "null argument");
  return guarded([&] {
    auto records = pluto::read_csv_records(csv_path);
    if (records.empty()) throw pluto::DataError(std::string("'") + csv_path + "' has no header");
    const std::size_t j = header_index(records[0], column, csv_path);
    const std::size_t rows = records.size() - 1;
    auto* buf = static_cast<uint8_t*>(std::malloc(std::max<std::size_t>(rows, 1)));
    if (!buf) throw std::bad_alloc();
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& rec = records[i + 1];
      const std::string cell = j < rec.size() ? rec[j] : "";
      if (positive_label) {
        buf[i] = cell == positive_label ? 1 : 0;
      } else if (cell == "0" || cell == "1") {
        buf[i] = cell == "1";
      } else {
        std::free(buf);
        throw pluto::DataError("row " + std::to_string(i + 1) + ", column '" + column + "': response '" + cell +
                               "' is not 0 or 1");
      }
    }
    *values = buf;
    *n = rows;
  });
}

pluto_status pluto_config_validate(const char* config_json, char** normalized_json) {
  PLUTO_REQUIRE(normalized_json, "null argument");
  return guarded([&] {
    pluto::RunConfig cfg = pluto::RunConfig::from_json(parse_json(config_json, "config"));
    cfg.validate();
    *normalized_json = dup_string(cfg.to_json().dump());
  });
}

pluto_status pluto_train(const pluto_dataset* data, const char* config_json, pluto_trace_fn trace,
                         void* trace_user, pluto_tree** out, char** report_json) {
  PLUTO_REQUIRE(data && out, "null argument");
  return guarded([&] {
    pluto::RunConfig cfg = pluto::RunConfig::from_json(parse_json(config_json, "config"));
    cfg.validate();
    if (!cfg.seed) throw pluto::ConfigError("config has no seed");
    std::function<void(const nlohmann::json&)> cb;
    if (trace) cb = [&](const nlohmann::json& j) { trace(j.dump().c_str(), trace_user); };
    pluto::TrainResult res = pluto::train(data->data, data->schema, cfg, cb);
    auto handle = std::make_unique<pluto_tree>();
    handle->tree = std::move(res.tree);
    if (report_json) *report_json = dup_string(res.report.to_json().dump(2));
    *out = handle.release();
  });
}

void pluto_tree_free(pluto_tree* tree) { delete tree; }

pluto_status pluto_tree_save(const pluto_tree* tree, const char* path) {
  PLUTO_REQUIRE(tree && path, "null argument");
  return guarded([&] {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw pluto::IoError(std::string("cannot write '") + path + "'");
    os << tree->tree.to_json().dump(2) << '\n';
    if (!os) throw pluto::IoError(std::string("write to '") + path + "' failed");
  });
}

pluto_status pluto_tree_load(const char* path, pluto_tree** out) {
  PLUTO_REQUIRE(path && out, "null argument");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw pluto::IoError(std::string("cannot open '") + path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw pluto::IoError(std::string("'") + path + "' is not valid JSON: " + e.what());
    }
    auto handle = std::make_unique<pluto_tree>();
    handle->tree = pluto::Tree::from_json(doc);
    *out = handle.release();
  });
}

pluto_status pluto_tree_to_json(const pluto_tree* tree, char** out) {
  PLUTO_REQUIRE(tree && out, "null argument");
  return guarded([&] { *out = dup_string(tree->tree.to_json().dump(2)); });
}

pluto_status pluto_tree_to_dot(const pluto_tree* tree, char** out) {
  PLUTO_REQUIRE(tree && out, "null argument");
  return guarded([&] { *out = dup_string(tree->tree.to_dot()); });
}

size_t pluto_tree_leaves(const pluto_tree* tree) { return tree ? tree->tree.n_leaves() : 0; }

pluto_status pluto_tree_predict(const pluto_tree* tree, const pluto_dataset* data, double* out, size_t n) {
  PLUTO_REQUIRE(tree && data && (out || n == 0), "null argument");
  PLUTO_REQUIRE(n == data->data.n_rows(), "buffer length does not match the row count");
  return guarded([&] {
    auto p = tree->tree.predict(data->data);
    std::copy(p.begin(), p.end(), out);
  });
}

pluto_status pluto_score(const uint8_t* y, const double* p, size_t n, double trim_frac, char** report_json) {
  PLUTO_REQUIRE((y && p) || n == 0, "null argument");
  PLUTO_REQUIRE(report_json, "null argument");
  return guarded([&] {
    if (!(trim_frac >= 0.0 && trim_frac < 1.0)) throw pluto::ConfigError("trim fraction must lie in [0, 1)");
    for (size_t i = 0; i < n; ++i)
      if (y[i] > 1) throw pluto::DataError("labels must be 0 or 1");
    auto rep = pluto::score({y, n}, {p, n}, trim_frac);
    *report_json = dup_string(rep.to_json().dump(2));
  });
}

pluto_status pluto_importance(const pluto_tree* tree, const pluto_dataset* test, const char* options_json,
                              char** report_json, char** table_text) {
  PLUTO_REQUIRE(tree && test && report_json, "null argument");
  return guarded([&] {
    nlohmann::json o = parse_json(options_json, "importance options");
    pluto::ImportanceOptions opts;
    try {
      opts.reps = o.value("reps", opts.reps);
      opts.with_replacement = o.value("with_replacement", opts.with_replacement);
      opts.trim_frac = o.value("trim_frac", opts.trim_frac);
      opts.seed = o.value("seed", opts.seed);
    } catch (const nlohmann::json::exception& e) {
      throw pluto::ConfigError(std::string("bad importance option: ") + e.what());
    }
    auto rep = pluto::rank_importance(tree->tree, test->data, opts);
    *report_json = dup_string(rep.to_json().dump(2));
    if (table_text) *table_text = dup_string(rep.to_table());
  });
}

pluto_status pluto_simulate(const char* options_json, char** table_json, char** table_csv) {
  PLUTO_REQUIRE(table_json, "null argument");
  return guarded([&] {
    nlohmann::json o = parse_json(options_json, "simulation options");
    pluto::SelectionOptions opts;
    pluto::SimModel model;
    try {
      model = pluto::parse_sim_model(o.value("model", std::string("null")));
      opts.model.option = pluto::parse_option(o.value("option", std::string("simple")));
      opts.model.alpha = o.value("alpha", opts.model.alpha);
      opts.model.cv_folds = o.value("cv_folds", opts.model.cv_folds);
      opts.model.n_lambda = o.value("n_lambda", opts.model.n_lambda);
      opts.iterations = o.value("iterations", opts.iterations);
      opts.n = o.value("n", opts.n);
      opts.m = o.value("m_groups", opts.m);
      opts.bias_correct = o.value("bias_correct", opts.bias_correct);
      opts.calibration.reps = o.value("calib_reps", opts.calibration.reps);
      if (o.contains("calib_grid")) opts.calibration.grid = pluto::parse_calib_grid(o["calib_grid"].get<std::string>());
      opts.seed = o.value("seed", opts.seed);
    } catch (const nlohmann::json::exception& e) {
      throw pluto::ConfigError(std::string("bad simulation option: ") + e.what());
    }
    if (opts.m < 2) throw pluto::ConfigError("m_groups must be at least 2");
    auto table = pluto::selection_experiment(model, opts);
    *table_json = dup_string(table.to_json().dump(2));
    if (table_csv) *table_csv = dup_string(table.to_csv());
  });
}

pluto_status pluto_file_sha256(const char* path, char** hex) {
  PLUTO_REQUIRE(path && hex, "null argument");
  return guarded([&] { *hex = dup_string(pluto::sha256_file(path)); });
}

}  // extern "C"
