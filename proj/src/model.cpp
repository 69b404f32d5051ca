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

#include "acme/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "acme/error.hpp"

namespace acme {
namespace {

constexpr double kProbabilityTolerance = 1e-9;
constexpr double kRankTolerance = 1e-10;

bool SameFeatures(const Schema& a, const Schema& b) {
  if (&a == &b) return true;
  if (a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j].kind != b[j].kind) return false;
    if (a[j].kind == FeatureKind::kCategorical && a[j].levels != b[j].levels) {
      return false;
    }
  }
  return true;
}

bool AllNumeric(const Schema& schema) {
  return std::all_of(schema.features().begin(), schema.features().end(),
                     [](const FeatureInfo& f) {
                       return f.kind == FeatureKind::kNumeric;
                     });
}

}  // namespace

Predictions::Predictions(std::size_t rows, std::size_t width,
                         std::vector<double> values)
    : rows_(rows), width_(width), values_(std::move(values)) {
  if (values_.size() != rows_ * width_) {
    Fail(ErrorCode::kShape, "prediction block size does not match rows x width");
  }
}

std::vector<double> Predictions::Column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Predictions PredictBatch(const Predictor& model, const FeatureMatrix& rows) {
  const Schema& expected = model.schema();
  if (rows.cols() != expected.size()) {
    Fail(ErrorCode::kShape, "batch has width " + std::to_string(rows.cols()) +
                                ", model expects " +
                                std::to_string(expected.size()));
  }
  if (!SameFeatures(rows.schema(), expected)) {
    Fail(ErrorCode::kKind, "batch feature kinds do not match the model schema");
  }
  const std::size_t width = model.task().output_width();
  if (rows.rows() == 0) return Predictions(0, width);

  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (expected[j].kind != FeatureKind::kCategorical) continue;
    const auto levels = static_cast<double>(expected[j].levels.size());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const double code = rows(r, j);
      if (!(code >= 0.0 && code < levels) || code != std::floor(code)) {
        Fail(ErrorCode::kKind, "invalid level code in feature '" +
                                   expected[j].name + "'");
      }
    }
  }

  Predictions out = model.PredictRows(rows);
  if (out.rows() != rows.rows() || out.width() != width) {
    Fail(ErrorCode::kShape,
         "model returned " + std::to_string(out.rows()) + "x" +
             std::to_string(out.width()) + " predictions, expected " +
             std::to_string(rows.rows()) + "x" + std::to_string(width));
  }
  if (model.task().is_classification()) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double sum = 0.0;
      for (double p : out.row(r)) {
        if (!(p >= -kProbabilityTolerance && p <= 1.0 + kProbabilityTolerance)) {
          Fail(ErrorCode::kDomain, "class probability outside [0, 1] in row " +
                                       std::to_string(r));
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        Fail(ErrorCode::kDomain,
             "class probabilities of row " + std::to_string(r) +
                 " do not sum to 1");
      }
    }
  } else {
    for (double v : out.values()) {
      if (!std::isfinite(v)) Fail(ErrorCode::kDomain, "non-finite prediction");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// OneHotEncoder

OneHotEncoder::OneHotEncoder(const Schema& schema, bool drop_first)
    : drop_first_(drop_first) {
  for (const auto& info : schema.features()) {
    Slot slot;
    slot.offset = width_;
    if (info.kind == FeatureKind::kNumeric) {
      slot.numeric = true;
      width_ += 1;
    } else {
      slot.numeric = false;
      slot.levels = info.levels.size();
      width_ += drop_first ? slot.levels - 1 : slot.levels;
    }
    slots_.push_back(slot);
  }
}

void OneHotEncoder::Encode(std::span<const double> row,
                           std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    const Slot& slot = slots_[j];
    if (slot.numeric) {
      out[slot.offset] = row[j];
      continue;
    }
    const auto code = static_cast<std::size_t>(row[j]);
    if (drop_first_) {
      if (code > 0) out[slot.offset + code - 1] = 1.0;
    } else {
      out[slot.offset + code] = 1.0;
    }
  }
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(std::shared_ptr<const Schema> schema,
                         std::vector<double> coefficients, double intercept)
    : Predictor(std::move(schema), Task::Regression()),
      encoder_(this->schema(), /*drop_first=*/true),
      numeric_only_(AllNumeric(this->schema())),
      coefficients_(std::move(coefficients)),
      intercept_(intercept) {
  if (coefficients_.size() != encoder_.width()) {
    Fail(ErrorCode::kShape, "linear model expects " +
                                std::to_string(encoder_.width()) +
                                " coefficients, got " +
                                std::to_string(coefficients_.size()));
  }
}

double LinearModel::PredictOne(std::span<const double> row) const {
  double sum = intercept_;
  if (numeric_only_) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      sum += coefficients_[j] * row[j];
    }
    return sum;
  }
  std::vector<double> encoded(encoder_.width());
  encoder_.Encode(row, encoded);
  for (std::size_t j = 0; j < encoded.size(); ++j) {
    sum += coefficients_[j] * encoded[j];
  }
  return sum;
}

Predictions LinearModel::PredictRows(const FeatureMatrix& rows) const {
  Predictions out(rows.rows(), 1);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    out(r, 0) = PredictOne(rows.row(r));
  }
  return out;
}

LinearModel FitLinearRegression(const FeatureMatrix& x,
                                std::span<const double> y) {
  if (y.size() != x.rows()) {
    Fail(ErrorCode::kShape, "target length " + std::to_string(y.size()) +
                                " does not match " + std::to_string(x.rows()) +
                                " rows");
  }
  const OneHotEncoder encoder(x.schema(), /*drop_first=*/true);
  const std::size_t d = encoder.width() + 1;
  if (x.rows() <= encoder.width()) {
    Fail(ErrorCode::kSingular, "linear regression needs more rows than features");
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd design(d);
  std::vector<double> encoded(encoder.width());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    encoder.Encode(x.row(r), encoded);
    for (std::size_t j = 0; j + 1 < d; ++j) design[j] = encoded[j];
    design[d - 1] = 1.0;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(design);
    rhs += y[r] * design;
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double largest = gram.diagonal().maxCoeff();
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() <= kRankTolerance * largest) {
    Fail(ErrorCode::kSingular,
         "design matrix is rank deficient (with intercept column)");
  }
  Eigen::VectorXd beta = ldlt.solve(rhs);
  // One step of iterative refinement.
  const Eigen::VectorXd residual = rhs - gram * beta;
  beta += ldlt.solve(residual);

  std::vector<double> coefficients(d - 1);
  for (std::size_t j = 0; j + 1 < d; ++j) coefficients[j] = beta[j];
  return LinearModel(x.schema_ptr(), std::move(coefficients), beta[d - 1]);
}

// ---------------------------------------------------------------------------
// KnnModel

KnnModel::KnnModel(const FeatureMatrix& training, std::vector<double> targets,
                   std::size_t k, Task task)
    : Predictor(training.schema_ptr(), std::move(task)),
      encoder_(training.schema(), /*drop_first=*/false),
      n_train_(training.rows()),
      targets_(std::move(targets)),
      k_(k) {
  if (targets_.size() != n_train_) {
    Fail(ErrorCode::kShape, "k-NN targets do not match training rows");
  }
  if (k_ < 1 || k_ > n_train_) {
    Fail(ErrorCode::kDomain, "k must lie in [1, " + std::to_string(n_train_) +
                                 "], got " + std::to_string(k_));
  }
  if (this->task().is_classification()) {
    const auto classes = static_cast<double>(this->task().n_classes());
    for (double t : targets_) {
      if (!(t >= 0.0 && t < classes) || t != std::floor(t)) {
        Fail(ErrorCode::kDomain, "class index out of range in k-NN targets");
      }
    }
  }
  encoded_.resize(n_train_ * encoder_.width());
  for (std::size_t r = 0; r < n_train_; ++r) {
    encoder_.Encode(training.row(r),
                    std::span<double>(encoded_).subspan(r * encoder_.width(),
                                                        encoder_.width()));
  }
}

std::string KnnModel::Describe() const {
  return std::string(task().is_classification() ? "knn-classifier" : "knn") +
         "(k=" + std::to_string(k_) + ")";
}

Predictions KnnModel::PredictRows(const FeatureMatrix& rows) const {
  const std::size_t width = task().output_width();
  const std::size_t dim = encoder_.width();
  Predictions out(rows.rows(), width);
  std::vector<double> query(dim);
  std::vector<std::pair<double, std::size_t>> order(n_train_);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    encoder_.Encode(rows.row(r), query);
    for (std::size_t i = 0; i < n_train_; ++i) {
      const double* t = encoded_.data() + i * dim;
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = t[c] - query[c];
        d2 += diff * diff;
      }
      order[i] = {d2, i};
    }
    std::nth_element(order.begin(), order.begin() + (k_ - 1), order.end());
    if (task().is_classification()) {
      for (std::size_t i = 0; i < k_; ++i) {
        out(r, static_cast<std::size_t>(targets_[order[i].second])) += 1.0;
      }
      for (std::size_t c = 0; c < width; ++c) {
        out(r, c) /= static_cast<double>(k_);
      }
    } else {
      // Sum in row-index order so the result does not depend on selection.
      std::sort(order.begin(), order.begin() + k_,
                [](const auto& a, const auto& b) { return a.second < b.second; });
      double sum = 0.0;
      for (std::size_t i = 0; i < k_; ++i) sum += targets_[order[i].second];
      out(r, 0) = sum / static_cast<double>(k_);
    }
  }
  return out;
}

KnnModel FitKnn(const FeatureMatrix& x, std::span<const double> y,
                std::size_t k, const Task& task) {
  return KnnModel(x, std::vector<double>(y.begin(), y.end()), k, task);
}

ClassLabels ExtractClassLabels(const Dataset& dataset) {
  if (!dataset.target()) {
    Fail(ErrorCode::kInvalidArgument, "classification needs a target column");
  }
  const FeatureColumn& target = *dataset.target();
  ClassLabels labels;
  if (!target.is_numeric()) {
    labels.names = target.levels();
    labels.indices.assign(target.values().begin(), target.values().end());
    return labels;
  }
  std::vector<double> distinct(target.values().begin(), target.values().end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (double v : distinct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    labels.names.emplace_back(buf);
  }
  labels.indices.reserve(target.size());
  for (double v : target.values()) {
    labels.indices.push_back(static_cast<double>(
        std::lower_bound(distinct.begin(), distinct.end(), v) -
        distinct.begin()));
  }
  return labels;
}

}  // namespace acme
