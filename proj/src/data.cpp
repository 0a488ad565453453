#include "pluto/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pluto/error.hpp"

namespace pluto {

namespace {

struct RoleName {
  RoleKind kind;
  const char* name;
};

constexpr RoleName kRoleNames[] = {
    {RoleKind::NumericBoth, "numeric"},
    {RoleKind::NumericSplitOnly, "numeric_split"},
    {RoleKind::NumericFitOnly, "numeric_fit"},
    {RoleKind::CategoricalSplit, "categorical"},
    {RoleKind::Excluded, "excluded"},
    {RoleKind::Response, "response"},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string where(std::size_t row, const std::string& col) {
  return "row " + std::to_string(row + 1) + ", column '" + col + "'";
}

std::vector<std::string> default_level_order(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  bool all_numeric = std::all_of(out.begin(), out.end(),
                                 [](const std::string& s) { return parse_number(s).has_value(); });
  if (all_numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return out;
}

}  // namespace

const char* role_name(RoleKind kind) {
  for (const auto& r : kRoleNames)
    if (r.kind == kind) return r.name;
  return "excluded";
}

RoleKind parse_role(const std::string& name) {
  for (const auto& r : kRoleNames)
    if (name == r.name) return r.kind;
  // Long-form aliases.
  if (name == "numeric_both") return RoleKind::NumericBoth;
  if (name == "numeric_split_only") return RoleKind::NumericSplitOnly;
  if (name == "numeric_fit_only") return RoleKind::NumericFitOnly;
  if (name == "categorical_split") return RoleKind::CategoricalSplit;
  throw ConfigError("unknown variable role '" + name + "'");
}

Schema Schema::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("schema must be a JSON object of column -> {role}");
  Schema s;
  for (const auto& [name, spec] : doc.items()) {
    SchemaEntry e;
    if (spec.is_string()) {
      e.role.kind = parse_role(spec.get<std::string>());
    } else if (spec.is_object() && spec.contains("role")) {
      e.role.kind = parse_role(spec.at("role").get<std::string>());
      e.role.ordered = spec.value("ordered", false);
      if (spec.contains("levels")) e.levels = spec.at("levels").get<std::vector<std::string>>();
      if (e.role.kind == RoleKind::Response && spec.contains("positive"))
        e.levels = {spec.at("positive").get<std::string>()};
    } else {
      throw ConfigError("schema entry for '" + name + "' needs a role");
    }
    if (e.role.ordered && e.role.kind != RoleKind::CategoricalSplit)
      throw ConfigError("'ordered' only applies to categorical columns ('" + name + "')");
    if (e.role.kind == RoleKind::Response) {
      if (!s.response.empty()) throw ConfigError("schema names more than one response column");
      s.response = name;
    }
    s.entries.emplace(name, std::move(e));
  }
  if (s.response.empty()) throw ConfigError("schema has no response column");
  return s;
}

nlohmann::json Schema::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [name, e] : entries) {
    nlohmann::json j = {{"role", role_name(e.role.kind)}};
    if (e.role.kind == RoleKind::CategoricalSplit) {
      j["ordered"] = e.role.ordered;
      if (!e.levels.empty()) j["levels"] = e.levels;
    }
    if (e.role.kind == RoleKind::Response && !e.levels.empty()) j["positive"] = e.levels.front();
    doc[name] = std::move(j);
  }
  return doc;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed schema '" + path + "': " + e.what());
  }
  return Schema::from_json(doc);
}

Dataset::Dataset(std::vector<Column> columns, std::vector<std::uint8_t> response, std::string response_name)
    : columns_(std::move(columns)), response_(std::move(response)), response_name_(std::move(response_name)) {
  n_rows_ = response_.size();
  if (!columns_.empty()) {
    const auto& c0 = columns_.front();
    std::size_t n0 = c0.is_categorical() ? c0.codes.size() : c0.values.size();
    if (response_.empty()) n_rows_ = n0;
  }
  for (const auto& c : columns_) {
    std::size_t n = c.is_categorical() ? c.codes.size() : c.values.size();
    if (n != n_rows_) throw DataError("column '" + c.name + "' has " + std::to_string(n) + " rows, expected " +
                                      std::to_string(n_rows_));
  }
  for (auto v : response_)
    if (v > 1) throw DataError("response values must be 0 or 1");
}

std::optional<std::size_t> Dataset::find(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return j;
  return std::nullopt;
}

std::vector<std::size_t> Dataset::split_candidates() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].role.is_split_candidate()) out.push_back(j);
  return out;
}

std::vector<std::size_t> Dataset::regressor_candidates() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].role.is_regressor_candidate()) out.push_back(j);
  return out;
}

Dataset Dataset::with_values(std::size_t j, std::vector<double> values) const {
  Dataset copy = *this;
  copy.columns_.at(j).values = std::move(values);
  return copy;
}

Dataset Dataset::with_codes(std::size_t j, std::vector<int> codes) const {
  Dataset copy = *this;
  copy.columns_.at(j).codes = std::move(codes);
  return copy;
}

Dataset Dataset::with_response(std::vector<std::uint8_t> response) const {
  if (response.size() != n_rows_) throw DataError("replacement response has wrong length");
  Dataset copy = *this;
  copy.response_ = std::move(response);
  return copy;
}

NodeView NodeView::all(const Dataset& d) {
  NodeView v{&d, {}};
  v.rows.resize(d.n_rows());
  for (std::size_t i = 0; i < d.n_rows(); ++i) v.rows[i] = i;
  return v;
}

std::size_t NodeView::n_positive() const {
  std::size_t s = 0;
  for (auto r : rows) s += data->response()[r];
  return s;
}

bool NodeView::is_pure() const {
  std::size_t pos = n_positive();
  return pos == 0 || pos == rows.size();
}

std::vector<std::uint8_t> NodeView::responses() const {
  std::vector<std::uint8_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = data->response()[rows[i]];
  return out;
}

std::vector<double> NodeView::numeric(std::size_t col) const {
  const auto& src = data->column(col).values;
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = src[rows[i]];
  return out;
}

std::vector<int> NodeView::codes(std::size_t col) const {
  const auto& src = data->column(col).codes;
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = src[rows[i]];
  return out;
}

std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.erase(0, 3);  // UTF-8 BOM

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
      if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
      record.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field in '" + path + "'");
  if (field_started || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

Dataset load_csv(const std::string& path, const Schema& schema, const CsvOptions& opts) {
  auto records = read_csv_records(path);
  if (records.empty()) throw DataError("data file '" + path + "' has no header row");
  const auto& header = records.front();
  const std::size_t n = records.size() - 1;

  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[std::string(trim(header[j]))] = j;
  std::string missing;
  for (const auto& [name, e] : schema.entries) {
    if (index.count(name)) continue;
    if (e.role.kind == RoleKind::Response && !opts.require_response) continue;
    if (e.role.kind == RoleKind::Excluded) continue;
    missing += (missing.empty() ? "'" : ", '") + name + "'";
  }
  if (!missing.empty()) throw DataError("'" + path + "' is missing schema columns: " + missing);
  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != header.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(header.size()));

  std::vector<Column> columns;
  std::vector<std::uint8_t> response;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string name(trim(header[j]));
    auto it = schema.entries.find(name);
    if (it == schema.entries.end()) continue;
    const SchemaEntry& e = it->second;
    if (e.role.kind == RoleKind::Excluded) continue;

    if (e.role.kind == RoleKind::Response) {
      response.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        std::string_view cell = trim(records[r + 1][j]);
        if (cell.empty()) throw DataError("missing value at " + where(r, name));
        if (!e.levels.empty()) {
          response[r] = cell == e.levels.front() ? 1 : 0;
          continue;
        }
        auto v = parse_number(cell);
        if (!v || (*v != 0.0 && *v != 1.0))
          throw DataError("response must be 0 or 1 at " + where(r, name) + ", got '" + std::string(cell) + "'");
        response[r] = static_cast<std::uint8_t>(*v);
      }
      continue;
    }

    Column col;
    col.name = name;
    col.role = e.role;
    if (col.is_categorical()) {
      std::set<std::string> seen;
      for (std::size_t r = 0; r < n; ++r) {
        std::string cell(trim(records[r + 1][j]));
        if (cell.empty()) throw DataError("missing value at " + where(r, name));
        seen.insert(cell);
      }
      col.levels = e.levels.empty() ? default_level_order(seen) : e.levels;
      std::map<std::string, int> ids;
      for (std::size_t k = 0; k < col.levels.size(); ++k) ids[col.levels[k]] = static_cast<int>(k);
      col.codes.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        std::string cell(trim(records[r + 1][j]));
        auto found = ids.find(cell);
        if (found == ids.end()) {
          // Labels outside a declared level list get fresh ids.
          int id = static_cast<int>(col.levels.size());
          col.levels.push_back(cell);
          found = ids.emplace(cell, id).first;
        }
        col.codes[r] = found->second;
      }
    } else {
      col.values.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        std::string_view cell = records[r + 1][j];
        if (trim(cell).empty()) throw DataError("missing value at " + where(r, name));
        auto v = parse_number(cell);
        if (!v)
          throw DataError("non-numeric value '" + std::string(trim(cell)) + "' at " + where(r, name));
        col.values[r] = *v;
      }
    }
    columns.push_back(std::move(col));
  }
  if (opts.require_response && response.size() != n) throw DataError("no response column in '" + path + "'");
  return Dataset(std::move(columns), std::move(response), schema.response);
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << std::setprecision(17);
  bool first = true;
  for (const auto& c : d.columns()) {
    out << (first ? "" : ",") << csv_quote(c.name);
    first = false;
  }
  if (!d.response().empty()) out << (first ? "" : ",") << csv_quote(d.response_name());
  out << '\n';
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    first = true;
    for (const auto& c : d.columns()) {
      out << (first ? "" : ",");
      if (c.is_categorical())
        out << csv_quote(c.levels[c.codes[r]]);
      else
        out << c.values[r];
      first = false;
    }
    if (!d.response().empty()) out << (first ? "" : ",") << int(d.response()[r]);
    out << '\n';
  }
}

double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double h = (static_cast<double>(n) - 1.0) * p;  // zero-based position
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, n - 1);
  double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

CutpointSet quantile_cutpoints(std::span<const double> values, int m) {
  if (m < 2) throw ConfigError("number of groups M must be at least 2");
  CutpointSet out;
  out.groups = m;
  if (values.empty()) return out;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) return out;
  for (int k = 1; k < m; ++k) {
    double q = quantile_sorted(sorted, static_cast<double>(k) / m);
    if (out.cuts.empty() || q > out.cuts.back()) out.cuts.push_back(q);
  }
  return out;
}

int group_of(double value, const CutpointSet& cuts) {
  return static_cast<int>(std::lower_bound(cuts.cuts.begin(), cuts.cuts.end(), value) - cuts.cuts.begin());
}

std::vector<int> discretize(std::span<const double> values, const CutpointSet& cuts) {
  std::vector<int> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = group_of(values[i], cuts);
  return out;
}

}  // namespace pluto
