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

#ifndef ACME_MODEL_HPP_
#define ACME_MODEL_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "acme/tabular.hpp"

namespace acme {

enum class TaskKind { kRegression, kClassification };

struct Task {
  TaskKind kind = TaskKind::kRegression;
  std::vector<std::string> class_names;  // classification only

  static Task Regression() { return {}; }
  static Task Classification(std::vector<std::string> class_names) {
    return {TaskKind::kClassification, std::move(class_names)};
  }

  bool is_classification() const { return kind == TaskKind::kClassification; }
  std::size_t n_classes() const { return class_names.size(); }
  // Values produced per row: 1 for regression, n_classes otherwise.
  std::size_t output_width() const {
    return is_classification() ? class_names.size() : 1;
  }
};

// Row-major prediction block: one score per row (regression) or one
// probability row per input row (classification).
class Predictions {
 public:
  Predictions() = default;
  Predictions(std::size_t rows, std::size_t width)
      : rows_(rows), width_(width), values_(rows * width, 0.0) {}
  Predictions(std::size_t rows, std::size_t width, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t width() const { return width_; }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * width_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * width_ + c];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * width_, width_);
  }
  std::span<const double> values() const { return values_; }
  // Column c as a vector (e.g. probability of one class).
  std::vector<double> Column(std::size_t c) const;

 private:
  std::size_t rows_ = 0;
  std::size_t width_ = 1;
  std::vector<double> values_;
};

// Black-box batch prediction contract. Implementations must be deterministic
// and safe to call from several threads.
class Predictor {
 public:
  Predictor(std::shared_ptr<const Schema> schema, Task task)
      : schema_(std::move(schema)), task_(std::move(task)) {}
  virtual ~Predictor() = default;

  const Task& task() const { return task_; }
  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }

  // Short human-readable identity, e.g. "linear" or "knn(k=5)".
  virtual std::string Describe() const = 0;

  // Implementation hook; callers use PredictBatch, which validates shapes.
  virtual Predictions PredictRows(const FeatureMatrix& rows) const = 0;

 private:
  std::shared_ptr<const Schema> schema_;
  Task task_;
};

// Validated prediction: checks input width and feature kinds against the
// model schema, output shape, and the probability-row contract.
Predictions PredictBatch(const Predictor& model, const FeatureMatrix& rows);

// One-hot expansion of categorical features in level order. With drop_first
// the first level of each categorical feature is the implicit reference.
class OneHotEncoder {
 public:
  OneHotEncoder() = default;
  OneHotEncoder(const Schema& schema, bool drop_first);

  std::size_t width() const { return width_; }
  void Encode(std::span<const double> row, std::span<double> out) const;

 private:
  struct Slot {
    bool numeric = true;
    std::size_t offset = 0;
    std::size_t levels = 0;
  };
  std::vector<Slot> slots_;
  std::size_t width_ = 0;
  bool drop_first_ = false;
};

// Ordinary least-squares model: intercept + sum_j coef_j * x_j over the
// (drop-first one-hot) encoded row.
class LinearModel final : public Predictor {
 public:
  LinearModel(std::shared_ptr<const Schema> schema,
              std::vector<double> coefficients, double intercept);

  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

  double PredictOne(std::span<const double> row) const;

  std::string Describe() const override { return "linear"; }
  Predictions PredictRows(const FeatureMatrix& rows) const override;

 private:
  OneHotEncoder encoder_;
  bool numeric_only_;
  std::vector<double> coefficients_;
  double intercept_;
};

// Least squares via the normal equations of [X 1] with an LDLT factorization.
// Throws kSingular when a pivot drops below 1e-10 times the largest diagonal.
LinearModel FitLinearRegression(const FeatureMatrix& x,
                                std::span<const double> y);

// k-nearest-neighbours under Euclidean distance on one-hot encoded rows.
// Distance ties are broken by lower training-row index.
class KnnModel final : public Predictor {
 public:
  KnnModel(const FeatureMatrix& training, std::vector<double> targets,
           std::size_t k, Task task);

  std::size_t k() const { return k_; }

  std::string Describe() const override;
  Predictions PredictRows(const FeatureMatrix& rows) const override;

 private:
  OneHotEncoder encoder_;
  std::size_t n_train_;
  std::vector<double> encoded_;  // n_train x encoder width
  std::vector<double> targets_;  // value, or class index for classification
  std::size_t k_;
};

// For classification, targets hold class indices in [0, n_classes).
KnnModel FitKnn(const FeatureMatrix& x, std::span<const double> y,
                std::size_t k, const Task& task);

// Class labels of a dataset target and per-row class indices. Categorical
// targets keep first-appearance level order; numeric targets use ascending
// distinct values.
struct ClassLabels {
  std::vector<std::string> names;
  std::vector<double> indices;
};
ClassLabels ExtractClassLabels(const Dataset& dataset);

}  // namespace acme

#endif  // ACME_MODEL_HPP_
