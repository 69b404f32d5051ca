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

// Shared fixtures: lambda-backed predictors, a row-counting wrapper and small
// dataset builders.

#ifndef ACME_TESTS_SUPPORT_TEST_SUPPORT_HPP_
#define ACME_TESTS_SUPPORT_TEST_SUPPORT_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acme/model.hpp"
#include "acme/random.hpp"
#include "acme/tabular.hpp"

namespace acme::testing {

using RowFn = std::function<double(std::span<const double>)>;
using ProbFn = std::function<std::vector<double>(std::span<const double>)>;

// Regression predictor evaluating fn on each stored row.
class FnModel final : public Predictor {
 public:
  FnModel(std::shared_ptr<const Schema> schema, RowFn fn)
      : Predictor(std::move(schema), Task::Regression()), fn_(std::move(fn)) {}
  std::string Describe() const override { return "fn"; }
  Predictions PredictRows(const FeatureMatrix& rows) const override {
    Predictions out(rows.rows(), 1);
    for (std::size_t r = 0; r < rows.rows(); ++r) out(r, 0) = fn_(rows.row(r));
    return out;
  }

 private:
  RowFn fn_;
};

// Classification predictor; fn returns one probability row.
class ProbModel final : public Predictor {
 public:
  ProbModel(std::shared_ptr<const Schema> schema, std::vector<std::string> classes,
            ProbFn fn)
      : Predictor(std::move(schema), Task::Classification(std::move(classes))),
        fn_(std::move(fn)) {}
  std::string Describe() const override { return "prob"; }
  Predictions PredictRows(const FeatureMatrix& rows) const override {
    const std::size_t width = task().output_width();
    Predictions out(rows.rows(), width);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto p = fn_(rows.row(r));
      for (std::size_t c = 0; c < width; ++c) out(r, c) = p[c];
    }
    return out;
  }

 private:
  ProbFn fn_;
};

// Forwards to another predictor and counts batches and rows.
class CountingModel final : public Predictor {
 public:
  explicit CountingModel(std::shared_ptr<const Predictor> inner)
      : Predictor(inner->schema_ptr(), inner->task()), inner_(std::move(inner)) {}
  std::string Describe() const override { return "counting(" + inner_->Describe() + ")"; }
  Predictions PredictRows(const FeatureMatrix& rows) const override {
    ++calls_;
    rows_ += rows.rows();
    return inner_->PredictRows(rows);
  }
  std::size_t calls() const { return calls_; }
  std::size_t rows() const { return rows_; }

 private:
  std::shared_ptr<const Predictor> inner_;
  mutable std::atomic<std::size_t> calls_{0};
  mutable std::atomic<std::size_t> rows_{0};
};

inline Dataset NumericDataset(const std::vector<std::vector<double>>& columns,
                              std::optional<std::vector<double>> target = std::nullopt) {
  std::vector<FeatureColumn> features;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    features.push_back(FeatureColumn::Numeric("x" + std::to_string(j + 1), columns[j]));
  }
  std::optional<FeatureColumn> t;
  if (target) t = FeatureColumn::Numeric("y", *target);
  return Dataset(std::move(features), std::move(t));
}

// n rows of p independent features with random per-column scale and offset.
inline Dataset RandomDataset(Rng& rng, std::size_t n, std::size_t p) {
  std::vector<std::vector<double>> columns(p);
  for (auto& column : columns) {
    const double scale = 0.1 + 10.0 * rng.Uniform();
    const double offset = 20.0 * rng.Uniform() - 10.0;
    for (std::size_t i = 0; i < n; ++i) column.push_back(offset + scale * rng.Normal());
  }
  return NumericDataset(columns);
}

inline std::string ModelChildPath() { return ACME_MODEL_CHILD; }
inline std::string CliPath() { return ACME_CLI; }

}  // namespace acme::testing

#endif  // ACME_TESTS_SUPPORT_TEST_SUPPORT_HPP_
