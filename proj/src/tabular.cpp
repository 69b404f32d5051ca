/*
 * Copyright 2026 The AcME Toolkit Authors.
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

#include "acme/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "acme/error.hpp"

namespace acme {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> ParseFinite(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> SplitRecord(const std::string& line,
                                     std::size_t line_number) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::string(Trim(current)));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    Fail(ErrorCode::kParse,
         "unterminated quoted field on line " + std::to_string(line_number));
  }
  fields.push_back(std::string(Trim(current)));
  return fields;
}

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string QuoteIfNeeded(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void HashBytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

void HashColumn(std::uint64_t& h, const FeatureColumn& column) {
  HashBytes(h, column.name().data(), column.name().size());
  const int kind = static_cast<int>(column.kind());
  HashBytes(h, &kind, sizeof(kind));
  for (const auto& level : column.levels()) {
    HashBytes(h, level.data(), level.size());
    HashBytes(h, "\0", 1);
  }
  for (double v : column.values()) HashBytes(h, &v, sizeof(v));
}

}  // namespace

std::string_view KindName(FeatureKind kind) {
  return kind == FeatureKind::kNumeric ? "numeric" : "categorical";
}

// ---------------------------------------------------------------------------
// FeatureColumn

FeatureColumn::FeatureColumn(std::string name, FeatureKind kind,
                             std::vector<double> values,
                             std::vector<std::string> levels)
    : name_(std::move(name)),
      kind_(kind),
      values_(std::move(values)),
      levels_(std::move(levels)) {
  if (values_.empty()) {
    Fail(ErrorCode::kShape, "column '" + name_ + "' has no values");
  }
}

FeatureColumn FeatureColumn::Numeric(std::string name,
                                     std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      Fail(ErrorCode::kDomain, "column '" + name + "' has a non-finite value");
    }
  }
  return FeatureColumn(std::move(name), FeatureKind::kNumeric,
                       std::move(values), {});
}

FeatureColumn FeatureColumn::Categorical(
    std::string name, const std::vector<std::string>& values) {
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::size_t> codes;
  std::vector<double> encoded;
  encoded.reserve(values.size());
  for (const auto& v : values) {
    auto [it, inserted] = codes.emplace(v, levels.size());
    if (inserted) levels.push_back(v);
    encoded.push_back(static_cast<double>(it->second));
  }
  return FeatureColumn(std::move(name), FeatureKind::kCategorical,
                       std::move(encoded), std::move(levels));
}

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<FeatureInfo> features)
    : features_(std::move(features)) {}

std::optional<std::size_t> Schema::IndexOf(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return j;
  }
  return std::nullopt;
}

double Schema::Encode(std::size_t j, const Cell& cell) const {
  if (j >= features_.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "feature index " + std::to_string(j) + " out of range");
  }
  const FeatureInfo& info = features_[j];
  if (info.kind == FeatureKind::kNumeric) {
    const double* v = std::get_if<double>(&cell);
    if (v == nullptr) {
      Fail(ErrorCode::kKind,
           "feature '" + info.name + "' is numeric but got a text value");
    }
    if (!std::isfinite(*v)) {
      Fail(ErrorCode::kDomain, "feature '" + info.name + "' value not finite");
    }
    return *v;
  }
  const std::string* level = std::get_if<std::string>(&cell);
  if (level == nullptr) {
    Fail(ErrorCode::kKind,
         "feature '" + info.name + "' is categorical but got a number");
  }
  const auto it = std::find(info.levels.begin(), info.levels.end(), *level);
  if (it == info.levels.end()) {
    Fail(ErrorCode::kKind,
         "unknown level '" + *level + "' for feature '" + info.name + "'");
  }
  return static_cast<double>(it - info.levels.begin());
}

Cell Schema::Decode(std::size_t j, double stored) const {
  const FeatureInfo& info = features_.at(j);
  if (info.kind == FeatureKind::kNumeric) return stored;
  return info.levels.at(static_cast<std::size_t>(stored));
}

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(std::shared_ptr<const Schema> schema,
                             std::size_t rows)
    : schema_(std::move(schema)),
      rows_(rows),
      cells_(rows * schema_->size(), 0.0) {}

FeatureMatrix::FeatureMatrix(std::shared_ptr<const Schema> schema,
                             std::size_t rows, std::vector<double> cells)
    : schema_(std::move(schema)), rows_(rows), cells_(std::move(cells)) {
  if (cells_.size() != rows_ * schema_->size()) {
    Fail(ErrorCode::kShape, "matrix cell count does not match rows x cols");
  }
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<FeatureColumn> features,
                 std::optional<FeatureColumn> target)
    : features_(std::move(features)), target_(std::move(target)) {
  if (features_.empty()) Fail(ErrorCode::kShape, "dataset has no features");
  n_rows_ = features_.front().size();
  std::set<std::string> names;
  std::vector<FeatureInfo> infos;
  for (const auto& column : features_) {
    if (column.size() != n_rows_) {
      Fail(ErrorCode::kShape, "column '" + column.name() + "' has " +
                                  std::to_string(column.size()) +
                                  " values, expected " +
                                  std::to_string(n_rows_));
    }
    if (!names.insert(column.name()).second) {
      Fail(ErrorCode::kInvalidArgument,
           "duplicate column name '" + column.name() + "'");
    }
    infos.push_back({column.name(), column.kind(), column.levels()});
  }
  if (target_) {
    if (target_->size() != n_rows_) {
      Fail(ErrorCode::kShape, "target column has wrong length");
    }
    if (names.count(target_->name()) != 0) {
      Fail(ErrorCode::kInvalidArgument,
           "target name '" + target_->name() + "' duplicates a feature");
    }
  }
  schema_ = std::make_shared<const Schema>(std::move(infos));
}

FeatureMatrix Dataset::Matrix() const {
  FeatureMatrix m(schema_, n_rows_);
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const auto values = features_[j].values();
    for (std::size_t i = 0; i < n_rows_; ++i) m(i, j) = values[i];
  }
  return m;
}

FeatureMatrix Dataset::Rows(std::span<const std::size_t> indices) const {
  FeatureMatrix m(schema_, indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= n_rows_) {
      Fail(ErrorCode::kDomain,
           "row index " + std::to_string(indices[r]) + " out of range [0, " +
               std::to_string(n_rows_) + ")");
    }
    for (std::size_t j = 0; j < features_.size(); ++j) {
      m(r, j) = features_[j].value(indices[r]);
    }
  }
  return m;
}

FeatureMatrix Dataset::Row(std::size_t i) const {
  const std::size_t index[] = {i};
  return Rows(index);
}

std::vector<double> Dataset::TargetValues() const {
  if (!target_) Fail(ErrorCode::kInvalidArgument, "dataset has no target");
  if (!target_->is_numeric()) {
    Fail(ErrorCode::kKind, "target '" + target_->name() + "' is categorical");
  }
  const auto v = target_->values();
  return {v.begin(), v.end()};
}

Dataset Dataset::SelectFeatures(std::span<const std::size_t> indices) const {
  std::vector<FeatureColumn> selected;
  selected.reserve(indices.size());
  for (std::size_t j : indices) selected.push_back(features_.at(j));
  return Dataset(std::move(selected), target_);
}

std::uint64_t Dataset::Fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& column : features_) HashColumn(h, column);
  if (target_) HashColumn(h, *target_);
  return h;
}

// ---------------------------------------------------------------------------
// CSV

Dataset LoadCsv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) Fail(ErrorCode::kParse, "empty CSV input");
  ++line_number;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = SplitRecord(line, line_number);
  {
    std::set<std::string> seen;
    for (const auto& name : header) {
      if (name.empty()) Fail(ErrorCode::kParse, "empty column name in header");
      if (!seen.insert(name).second) {
        Fail(ErrorCode::kParse, "duplicate header '" + name + "'");
      }
    }
  }
  for (const auto& [name, kind] : options.kind_overrides) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      Fail(ErrorCode::kInvalidArgument,
           "kind override names unknown column '" + name + "'");
    }
  }

  std::vector<std::vector<std::string>> cells(header.size());
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    auto fields = SplitRecord(line, line_number);
    if (fields.size() != header.size()) {
      Fail(ErrorCode::kParse, "line " + std::to_string(line_number) + " has " +
                                  std::to_string(fields.size()) +
                                  " fields, expected " +
                                  std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (fields[c].empty()) {
        Fail(ErrorCode::kParse, "missing value at row " +
                                    std::to_string(data_row) + ", column '" +
                                    header[c] + "' (line " +
                                    std::to_string(line_number) + ")");
      }
      cells[c].push_back(std::move(fields[c]));
    }
    ++data_row;
  }
  if (data_row == 0) Fail(ErrorCode::kParse, "CSV has a header but no rows");

  std::vector<FeatureColumn> features;
  std::optional<FeatureColumn> target;
  bool target_found = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::optional<FeatureKind> forced;
    if (auto it = options.kind_overrides.find(header[c]);
        it != options.kind_overrides.end()) {
      forced = it->second;
    }
    std::vector<double> parsed;
    bool numeric = forced.value_or(FeatureKind::kNumeric) ==
                   FeatureKind::kNumeric;
    if (numeric) {
      parsed.reserve(cells[c].size());
      for (std::size_t r = 0; r < cells[c].size(); ++r) {
        const auto v = ParseFinite(cells[c][r]);
        if (!v) {
          if (forced) {
            Fail(ErrorCode::kParse, "column '" + header[c] +
                                        "' forced numeric but row " +
                                        std::to_string(r) + " holds '" +
                                        cells[c][r] + "'");
          }
          numeric = false;
          break;
        }
        parsed.push_back(*v);
      }
    }
    FeatureColumn column =
        numeric ? FeatureColumn::Numeric(header[c], std::move(parsed))
                : FeatureColumn::Categorical(header[c], cells[c]);
    if (options.target && header[c] == *options.target) {
      target.emplace(std::move(column));
      target_found = true;
    } else {
      features.push_back(std::move(column));
    }
  }
  if (options.target && !target_found) {
    Fail(ErrorCode::kInvalidArgument,
         "target column '" + *options.target + "' not found in header");
  }
  return Dataset(std::move(features), std::move(target));
}

Dataset LoadCsvFile(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  return LoadCsv(in, options);
}

void WriteCsv(const Dataset& dataset, std::ostream& out) {
  std::vector<const FeatureColumn*> columns;
  for (const auto& c : dataset.features()) columns.push_back(&c);
  if (dataset.target()) columns.push_back(&*dataset.target());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << QuoteIfNeeded(columns[c]->name());
  }
  out << '\n';
  for (std::size_t i = 0; i < dataset.n_rows(); ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      const FeatureColumn& col = *columns[c];
      if (col.is_numeric()) {
        out << FormatNumber(col.value(i));
      } else {
        out << QuoteIfNeeded(col.levels()[static_cast<std::size_t>(col.value(i))]);
      }
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Quantiles

double QuantileOfSorted(std::span<const double> sorted, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    Fail(ErrorCode::kDomain, "quantile level must lie in [0, 1]");
  }
  if (sorted.empty()) Fail(ErrorCode::kShape, "quantile of an empty column");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double EmpiricalQuantile(const FeatureColumn& column, double q) {
  if (!column.is_numeric()) {
    Fail(ErrorCode::kKind,
         "quantile requested for categorical column '" + column.name() + "'");
  }
  std::vector<double> sorted(column.values().begin(), column.values().end());
  std::sort(sorted.begin(), sorted.end());
  return QuantileOfSorted(sorted, q);
}

QuantileGrid MakeQuantileGrid(std::size_t count, bool robust) {
  if (count < 2) Fail(ErrorCode::kDomain, "quantile grid needs Q >= 2");
  const double lo = robust ? 0.1 : 0.0;
  const double hi = robust ? 0.9 : 1.0;
  QuantileGrid grid;
  grid.robust = robust;
  grid.levels.resize(count);
  const double steps = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    grid.levels[i] = robust ? lo + (hi - lo) * static_cast<double>(i) / steps
                            : static_cast<double>(i) / steps;
  }
  grid.levels.front() = lo;
  grid.levels.back() = hi;
  return grid;
}

FeatureSummary Summarize(const FeatureColumn& column) {
  FeatureSummary s;
  s.kind = column.kind();
  const auto values = column.values();
  if (column.is_numeric()) {
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    s.min = *mn;
    s.max = *mx;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.distinct = static_cast<std::size_t>(
        std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    return s;
  }
  std::vector<std::size_t> counts(column.levels().size(), 0);
  for (double v : values) ++counts[static_cast<std::size_t>(v)];
  // Codes follow first appearance, so the first maximum wins ties.
  s.mode_code = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  s.mode = column.levels()[s.mode_code];
  s.distinct = column.levels().size();
  s.min = 0.0;
  s.max = static_cast<double>(s.distinct - 1);
  return s;
}

BaselineVector GlobalBaseline(const Dataset& dataset) {
  BaselineVector b;
  b.origin = BaselineOrigin::kGlobalMeanMode;
  b.entries.reserve(dataset.n_features());
  for (const auto& column : dataset.features()) {
    const FeatureSummary s = Summarize(column);
    b.entries.push_back(column.is_numeric() ? s.mean
                                            : static_cast<double>(s.mode_code));
  }
  return b;
}

BaselineVector ObservationBaseline(const Dataset& dataset, std::size_t row) {
  if (row >= dataset.n_rows()) {
    Fail(ErrorCode::kDomain,
         "row " + std::to_string(row) + " out of range [0, " +
             std::to_string(dataset.n_rows()) + ")");
  }
  BaselineVector b;
  b.origin = BaselineOrigin::kObservation;
  b.row = row;
  for (const auto& column : dataset.features()) {
    b.entries.push_back(column.value(row));
  }
  return b;
}

}  // namespace acme
