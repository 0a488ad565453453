#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pluto {

enum class RoleKind {
  NumericBoth,       // split candidate and regressor candidate
  NumericSplitOnly,
  NumericFitOnly,
  CategoricalSplit,
  Excluded,
  Response,
};

struct VariableRole {
  RoleKind kind = RoleKind::Excluded;
  bool ordered = false;  // categorical only

  bool is_categorical() const { return kind == RoleKind::CategoricalSplit; }
  bool is_split_candidate() const {
    return kind == RoleKind::NumericBoth || kind == RoleKind::NumericSplitOnly ||
           kind == RoleKind::CategoricalSplit;
  }
  bool is_regressor_candidate() const {
    return kind == RoleKind::NumericBoth || kind == RoleKind::NumericFitOnly;
  }
};

const char* role_name(RoleKind kind);
RoleKind parse_role(const std::string& name);

/// One predictor column. Numeric columns fill `values`; categorical columns
/// fill `codes` with ids into `levels`.
struct Column {
  std::string name;
  VariableRole role;
  std::vector<double> values;
  std::vector<int> codes;
  std::vector<std::string> levels;

  bool is_categorical() const { return role.is_categorical(); }
};

struct SchemaEntry {
  VariableRole role;
  std::vector<std::string> levels;  // optional explicit level order for categoricals
};

/// Column name -> role. Header columns without an entry are excluded.
struct Schema {
  std::map<std::string, SchemaEntry> entries;
  std::string response;

  static Schema from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

Schema load_schema(const std::string& path);

/// Immutable after construction; predictors in header order plus the binary
/// response.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Column> columns, std::vector<std::uint8_t> response, std::string response_name);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_columns() const { return columns_.size(); }
  const Column& column(std::size_t j) const { return columns_[j]; }
  const std::vector<Column>& columns() const { return columns_; }
  std::span<const std::uint8_t> response() const { return response_; }
  const std::string& response_name() const { return response_name_; }
  bool has_response() const { return !response_.empty() || n_rows_ == 0; }

  std::optional<std::size_t> find(const std::string& name) const;

  /// Column indices in schema order.
  std::vector<std::size_t> split_candidates() const;
  std::vector<std::size_t> regressor_candidates() const;

  /// Copy with one column's contents replaced (values or codes by column type).
  Dataset with_values(std::size_t j, std::vector<double> values) const;
  Dataset with_codes(std::size_t j, std::vector<int> codes) const;
  Dataset with_response(std::vector<std::uint8_t> response) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::uint8_t> response_;
  std::string response_name_;
  std::size_t n_rows_ = 0;
};

/// A node's share of a dataset: row indices into the parent.
struct NodeView {
  const Dataset* data = nullptr;
  std::vector<std::size_t> rows;

  static NodeView all(const Dataset& d);
  std::size_t size() const { return rows.size(); }
  std::uint8_t y(std::size_t i) const { return data->response()[rows[i]]; }
  std::size_t n_positive() const;
  bool is_pure() const;
  std::vector<std::uint8_t> responses() const;
  std::vector<double> numeric(std::size_t col) const;
  std::vector<int> codes(std::size_t col) const;
};

struct CsvOptions {
  bool require_response = true;
};

/// RFC 4180 reader: comma separator, header row, quoted fields.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path);

Dataset load_csv(const std::string& path, const Schema& schema, const CsvOptions& opts = {});

/// Writes numerics with round-trip-safe formatting.
void write_csv(const Dataset& d, const std::string& path);

/// Sorted cutpoints; `groups` is the nominal M.
struct CutpointSet {
  std::vector<double> cuts;
  int groups = 0;
};

/// Interpolated order-statistic quantile, h = (n-1)p + 1 on the sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

CutpointSet quantile_cutpoints(std::span<const double> values, int m);

/// Group index = number of cutpoints strictly below the value.
int group_of(double value, const CutpointSet& cuts);
std::vector<int> discretize(std::span<const double> values, const CutpointSet& cuts);

}  // namespace pluto
