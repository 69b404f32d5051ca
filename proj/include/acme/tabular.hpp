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

#ifndef ACME_TABULAR_HPP_
#define ACME_TABULAR_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace acme {

enum class FeatureKind { kNumeric, kCategorical };

std::string_view KindName(FeatureKind kind);

// A single cell at the API boundary: a real number or a categorical level.
using Cell = std::variant<double, std::string>;

// One named column. Categorical cells are stored as level codes (indices into
// levels(), which keeps first-appearance order), so every column is a dense
// vector of doubles.
class FeatureColumn {
 public:
  static FeatureColumn Numeric(std::string name, std::vector<double> values);
  static FeatureColumn Categorical(std::string name,
                                   const std::vector<std::string>& values);

  const std::string& name() const { return name_; }
  FeatureKind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == FeatureKind::kNumeric; }
  std::size_t size() const { return values_.size(); }

  // Raw value of row i; a level code for categorical columns.
  double value(std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  // Distinct levels in first-appearance order. Empty for numeric columns.
  const std::vector<std::string>& levels() const { return levels_; }

 private:
  FeatureColumn(std::string name, FeatureKind kind, std::vector<double> values,
                std::vector<std::string> levels);

  std::string name_;
  FeatureKind kind_;
  std::vector<double> values_;
  std::vector<std::string> levels_;
};

struct FeatureInfo {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<std::string> levels;
};

// Names, kinds and level dictionaries of a feature set. Shared by every
// matrix derived from the same dataset.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureInfo> features);

  std::size_t size() const { return features_.size(); }
  const FeatureInfo& operator[](std::size_t j) const { return features_[j]; }
  const std::vector<FeatureInfo>& features() const { return features_; }

  std::optional<std::size_t> IndexOf(std::string_view name) const;

  // Converts between boundary cells and stored doubles. Encode throws a kind
  // error when the cell type does not match the feature, or when a level is
  // unknown.
  double Encode(std::size_t j, const Cell& cell) const;
  Cell Decode(std::size_t j, double stored) const;

 private:
  std::vector<FeatureInfo> features_;
};

// Dense row-major batch of feature rows sharing one schema.
class FeatureMatrix {
 public:
  FeatureMatrix(std::shared_ptr<const Schema> schema, std::size_t rows);
  FeatureMatrix(std::shared_ptr<const Schema> schema, std::size_t rows,
                std::vector<double> cells);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return schema_->size(); }

  double operator()(std::size_t r, std::size_t c) const {
    return cells_[r * cols() + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return cells_[r * cols() + c];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(cells_).subspan(r * cols(), cols());
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(cells_).subspan(r * cols(), cols());
  }
  std::span<const double> data() const { return cells_; }

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }

 private:
  std::shared_ptr<const Schema> schema_;
  std::size_t rows_;
  std::vector<double> cells_;
};

// Immutable column-oriented table: p feature columns plus an optional target.
class Dataset {
 public:
  Dataset(std::vector<FeatureColumn> features,
          std::optional<FeatureColumn> target = std::nullopt);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_features() const { return features_.size(); }
  const FeatureColumn& feature(std::size_t j) const { return features_[j]; }
  const std::vector<FeatureColumn>& features() const { return features_; }
  const std::optional<FeatureColumn>& target() const { return target_; }
  const std::shared_ptr<const Schema>& schema() const { return schema_; }

  FeatureMatrix Matrix() const;
  FeatureMatrix Rows(std::span<const std::size_t> indices) const;
  FeatureMatrix Row(std::size_t i) const;

  // Numeric target values; throws if there is no numeric target.
  std::vector<double> TargetValues() const;

  // Keeps only the listed features (in the given order) and the target.
  Dataset SelectFeatures(std::span<const std::size_t> indices) const;

  // FNV-1a digest of names, kinds, levels and every stored cell.
  std::uint64_t Fingerprint() const;

 private:
  std::vector<FeatureColumn> features_;
  std::optional<FeatureColumn> target_;
  std::size_t n_rows_ = 0;
  std::shared_ptr<const Schema> schema_;
};

struct CsvOptions {
  std::optional<std::string> target;
  std::map<std::string, FeatureKind> kind_overrides;
};

Dataset LoadCsv(std::istream& in, const CsvOptions& options = {});
Dataset LoadCsvFile(const std::string& path, const CsvOptions& options = {});
// Writes features then target, numbers with 17 significant digits.
void WriteCsv(const Dataset& dataset, std::ostream& out);

// Linear interpolation between order statistics at position (N - 1) * q.
double EmpiricalQuantile(const FeatureColumn& column, double q);
// Same estimator over values already sorted ascending.
double QuantileOfSorted(std::span<const double> sorted, double q);

struct QuantileGrid {
  std::vector<double> levels;
  bool robust = false;

  std::size_t size() const { return levels.size(); }
};

inline constexpr std::size_t kDefaultQuantiles = 50;

// Q equally spaced levels over [0, 1], or over [0.1, 0.9] when robust.
QuantileGrid MakeQuantileGrid(std::size_t count, bool robust = false);

struct FeatureSummary {
  FeatureKind kind = FeatureKind::kNumeric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  // Categorical only: the most frequent level, earliest level on ties.
  std::size_t mode_code = 0;
  std::string mode;
  std::size_t distinct = 0;
};

FeatureSummary Summarize(const FeatureColumn& column);

enum class BaselineOrigin { kGlobalMeanMode, kObservation };

struct BaselineVector {
  std::vector<double> entries;  // stored encoding, categorical as level code
  BaselineOrigin origin = BaselineOrigin::kGlobalMeanMode;
  std::size_t row = 0;          // meaningful for kObservation only
};

BaselineVector GlobalBaseline(const Dataset& dataset);
BaselineVector ObservationBaseline(const Dataset& dataset, std::size_t row);

}  // namespace acme

#endif  // ACME_TABULAR_HPP_
