/*
 * Copyright 2026 The fagtb Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Tabular datasets with a binary sensitive attribute and a binary label:
// in-memory representation, CSV ingestion driven by a JSON column schema,
// one-hot encoding of categoricals and seeded train/test splitting.

#ifndef FAGTB_DATA_HPP_
#define FAGTB_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fagtb/errors.hpp"
#include "fagtb/numeric.hpp"
#include "json.hpp"

namespace fagtb {

struct Dataset {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> features;  // row-major n x p
  std::vector<int> sensitive;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::string sensitive_name = "sensitive";
  std::string label_name = "label";

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * p, p};
  }
  double at(std::size_t i, std::size_t j) const { return features[i * p + j]; }

  // Throws DataError when an invariant does not hold.
  void validate() const {
    if (n == 0 || p == 0) throw DataError("dataset must have n >= 1 and p >= 1");
    if (features.size() != n * p || sensitive.size() != n ||
        labels.size() != n || feature_names.size() != p) {
      throw DataError("dataset component sizes disagree");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((sensitive[i] != 0 && sensitive[i] != 1) ||
          (labels[i] != 0 && labels[i] != 1)) {
        throw DataError("sensitive and labels must be 0/1 (row " +
                        std::to_string(i) + ")");
      }
    }
    for (double v : features) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.n = rows.size();
    out.p = p;
    out.feature_names = feature_names;
    out.sensitive_name = sensitive_name;
    out.label_name = label_name;
    out.features.reserve(rows.size() * p);
    out.sensitive.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= n) throw ArgumentError("row index out of range");
      const auto x = row(r);
      out.features.insert(out.features.end(), x.begin(), x.end());
      out.sensitive.push_back(sensitive[r]);
      out.labels.push_back(labels[r]);
    }
    return out;
  }

  // Content hash over shape, values and names; stable across runs.
  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a(&n, sizeof n);
    h = fnv1a(&p, sizeof p, h);
    h = fnv1a(features.data(), features.size() * sizeof(double), h);
    h = fnv1a(sensitive.data(), sensitive.size() * sizeof(int), h);
    h = fnv1a(labels.data(), labels.size() * sizeof(int), h);
    for (const auto& name : feature_names) h = fnv1a(name.data(), name.size(), h);
    return h;
  }
};

enum class ColumnRole { kFeature, kSensitive, kLabel, kIgnore };
enum class ColumnKind { kNumeric, kCategorical };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::kFeature;
  ColumnKind kind = ColumnKind::kNumeric;
  // For sensitive/label columns: raw value mapped to 1. When absent the raw
  // values must already be 0/1.
  std::optional<std::string> positive_value;
};

struct ColumnSchema {
  std::vector<ColumnSpec> columns;

  void validate() const {
    int labels = 0;
    int sensitive = 0;
    std::set<std::string> seen;
    for (const auto& c : columns) {
      if (!seen.insert(c.name).second) {
        throw SchemaError("duplicate column '" + c.name + "' in schema");
      }
      labels += c.role == ColumnRole::kLabel;
      sensitive += c.role == ColumnRole::kSensitive;
    }
    if (labels != 1) throw SchemaError("schema needs exactly one label column");
    if (sensitive != 1) {
      throw SchemaError("schema needs exactly one sensitive column");
    }
  }

  static ColumnSchema from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("columns") ||
        !doc["columns"].is_array()) {
      throw SchemaError("schema: expected an object with a 'columns' array");
    }
    ColumnSchema schema;
    for (const auto& col : doc["columns"]) {
      ColumnSpec spec;
      if (!col.contains("name") || !col["name"].is_string()) {
        throw SchemaError("schema: column entry missing string 'name'");
      }
      spec.name = col["name"].get<std::string>();
      const std::string role = col.value("role", "feature");
      if (role == "feature") {
        spec.role = ColumnRole::kFeature;
      } else if (role == "sensitive") {
        spec.role = ColumnRole::kSensitive;
      } else if (role == "label") {
        spec.role = ColumnRole::kLabel;
      } else if (role == "ignore") {
        spec.role = ColumnRole::kIgnore;
      } else {
        throw SchemaError("schema: column '" + spec.name + "' has unknown role '" +
                          role + "'");
      }
      const std::string kind = col.value("kind", "numeric");
      if (kind == "numeric") {
        spec.kind = ColumnKind::kNumeric;
      } else if (kind == "categorical") {
        spec.kind = ColumnKind::kCategorical;
      } else {
        throw SchemaError("schema: column '" + spec.name + "' has unknown kind '" +
                          kind + "'");
      }
      if (col.contains("positive_value")) {
        const auto& pv = col["positive_value"];
        spec.positive_value = pv.is_string() ? pv.get<std::string>() : pv.dump();
      }
      schema.columns.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
  }

  nlohmann::json to_json() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns) {
      nlohmann::json j;
      j["name"] = c.name;
      switch (c.role) {
        case ColumnRole::kFeature: j["role"] = "feature"; break;
        case ColumnRole::kSensitive: j["role"] = "sensitive"; break;
        case ColumnRole::kLabel: j["role"] = "label"; break;
        case ColumnRole::kIgnore: j["role"] = "ignore"; break;
      }
      j["kind"] = c.kind == ColumnKind::kNumeric ? "numeric" : "categorical";
      if (c.positive_value) j["positive_value"] = *c.positive_value;
      cols.push_back(std::move(j));
    }
    return nlohmann::json{{"columns", cols}};
  }
};

inline ColumnSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema '" + path + "': " + e.what());
  }
  return ColumnSchema::from_json(doc);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas and ""
// escapes; embedded newlines are not supported.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.emplace_back(trim(field));
  return fields;
}

inline bool is_missing(std::string_view v) {
  return v.empty() || v == "?" || v == "NA" || v == "NaN" || v == "nan";
}

inline std::optional<double> parse_real(std::string_view v) {
  double out = 0.0;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

}  // namespace detail

// Counts reported by the CSV loader alongside the dataset.
struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t dropped_missing = 0;
  std::size_t rejected_unparseable = 0;
};

inline Dataset parse_csv(std::istream& in, const ColumnSchema& schema,
                         LoadStats* stats = nullptr) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) {
    throw DataError("empty CSV input (no header)");
  }
  const auto header = detail::split_csv_line(line);

  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], i).second) {
      throw SchemaError("duplicate header column '" + header[i] + "'");
    }
  }
  std::vector<std::size_t> source;  // schema column -> raw column
  for (const auto& c : schema.columns) {
    const auto it = position.find(c.name);
    if (it == position.end()) {
      throw SchemaError("column '" + c.name + "' missing from CSV header");
    }
    source.push_back(it->second);
  }
  if (header.size() != schema.columns.size()) {
    for (const auto& h : header) {
      const bool known = std::any_of(
          schema.columns.begin(), schema.columns.end(),
          [&](const ColumnSpec& c) { return c.name == h; });
      if (!known) throw SchemaError("CSV column '" + h + "' not in schema");
    }
  }

  LoadStats local;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++local.rows_read;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    bool missing = false;
    bool bad = false;
    for (std::size_t k = 0; k < schema.columns.size(); ++k) {
      const auto& c = schema.columns[k];
      if (c.role == ColumnRole::kIgnore) continue;
      const std::string& v = fields[source[k]];
      if (detail::is_missing(v)) {
        missing = true;
      } else if (c.role == ColumnRole::kFeature && c.kind == ColumnKind::kNumeric &&
                 !detail::parse_real(v)) {
        bad = true;
      }
    }
    if (missing) {
      ++local.dropped_missing;
    } else if (bad) {
      ++local.rejected_unparseable;
    } else {
      rows.push_back(std::move(fields));
    }
  }
  if (local.dropped_missing > 0 || local.rejected_unparseable > 0) {
    std::clog << "fagtb: dropped " << local.dropped_missing
              << " rows with missing values, rejected "
              << local.rejected_unparseable << " unparseable rows\n";
  }
  if (stats != nullptr) *stats = local;
  if (rows.empty()) throw DataError("CSV contains no usable data rows");

  Dataset ds;
  ds.n = rows.size();
  ds.sensitive.resize(ds.n);
  ds.labels.resize(ds.n);

  // Column blocks in schema order; categoricals expand to sorted indicators.
  struct Block {
    std::size_t raw;
    bool categorical;
    std::vector<std::string> categories;
  };
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < schema.columns.size(); ++k) {
    const auto& c = schema.columns[k];
    if (c.role == ColumnRole::kSensitive || c.role == ColumnRole::kLabel) {
      std::set<std::string> distinct;
      for (const auto& r : rows) distinct.insert(r[source[k]]);
      auto& target = c.role == ColumnRole::kSensitive ? ds.sensitive : ds.labels;
      (c.role == ColumnRole::kSensitive ? ds.sensitive_name : ds.label_name) = c.name;
      if (c.positive_value) {
        if (distinct.size() > 2) {
          throw DataError("column '" + c.name + "' has " +
                          std::to_string(distinct.size()) +
                          " distinct values; expected a binary attribute");
        }
        if (distinct.size() == 2 && distinct.count(*c.positive_value) == 0) {
          throw DataError("column '" + c.name + "' never takes positive value '" +
                          *c.positive_value + "'");
        }
        for (std::size_t i = 0; i < ds.n; ++i) {
          target[i] = rows[i][source[k]] == *c.positive_value ? 1 : 0;
        }
      } else {
        for (std::size_t i = 0; i < ds.n; ++i) {
          const auto v = detail::parse_real(rows[i][source[k]]);
          if (!v || (*v != 0.0 && *v != 1.0)) {
            throw DataError("column '" + c.name + "' value '" +
                            rows[i][source[k]] +
                            "' is not 0/1 and no positive_value is set");
          }
          target[i] = *v == 1.0 ? 1 : 0;
        }
      }
    } else if (c.role == ColumnRole::kFeature) {
      Block b{source[k], c.kind == ColumnKind::kCategorical, {}};
      if (b.categorical) {
        std::set<std::string> distinct;
        for (const auto& r : rows) distinct.insert(r[b.raw]);
        b.categories.assign(distinct.begin(), distinct.end());
        for (const auto& cat : b.categories) ds.feature_names.push_back(c.name + "=" + cat);
      } else {
        ds.feature_names.push_back(c.name);
      }
      blocks.push_back(std::move(b));
    }
  }
  ds.p = ds.feature_names.size();
  if (ds.p == 0) throw SchemaError("schema has no feature columns");
  ds.features.reserve(ds.n * ds.p);
  for (const auto& r : rows) {
    for (const auto& b : blocks) {
      if (b.categorical) {
        for (const auto& cat : b.categories) ds.features.push_back(r[b.raw] == cat ? 1.0 : 0.0);
      } else {
        ds.features.push_back(*detail::parse_real(r[b.raw]));
      }
    }
  }
  ds.validate();
  return ds;
}

inline Dataset load_csv(const std::string& path, const ColumnSchema& schema,
                        LoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path + "'");
  return parse_csv(in, schema, stats);
}

// Shortest decimal form that round-trips for typical values, at most 6
// significant digits; the CSV contract for float columns.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes features (by name), then sensitive, then label columns.
inline void write_csv(std::ostream& out, const Dataset& ds) {
  for (const auto& name : ds.feature_names) out << name << ',';
  out << ds.sensitive_name << ',' << ds.label_name << '\n';
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.p; ++j) out << format_real(ds.at(i, j)) << ',';
    out << ds.sensitive[i] << ',' << ds.labels[i] << '\n';
  }
}

// Schema that reads back a CSV produced by write_csv, all features numeric.
inline ColumnSchema numeric_schema_for(const Dataset& ds) {
  ColumnSchema schema;
  for (const auto& name : ds.feature_names) {
    schema.columns.push_back({name, ColumnRole::kFeature, ColumnKind::kNumeric, {}});
  }
  schema.columns.push_back({ds.sensitive_name, ColumnRole::kSensitive, ColumnKind::kNumeric, {}});
  schema.columns.push_back({ds.label_name, ColumnRole::kLabel, ColumnKind::kNumeric, {}});
  return schema;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Test part size is round(n * test_fraction) clamped to [1, n - 1]. Both
// parts are returned in ascending row order.
inline SplitIndices split_indices(std::size_t n, double test_fraction,
                                  std::uint64_t seed,
                                  std::string_view stream = "split") {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ArgumentError("test_fraction must lie in (0, 1)");
  }
  if (n < 2) throw ArgumentError("splitting needs at least 2 rows");
  auto test_size = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * test_fraction));
  test_size = std::clamp<std::size_t>(test_size, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_stream(seed, stream);
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
  const auto idx = split_indices(ds.n, test_fraction, seed);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

}  // namespace fagtb

#endif  // FAGTB_DATA_HPP_
