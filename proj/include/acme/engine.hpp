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

#ifndef ACME_ENGINE_HPP_
#define ACME_ENGINE_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acme/model.hpp"
#include "acme/tabular.hpp"

namespace acme {

// Q (or M) probe rows that equal the baseline everywhere except feature j,
// which sweeps the feature's empirical quantiles (or categorical levels).
struct VariableQuantileMatrix {
  std::size_t feature = 0;
  // Grid levels for numeric features; i / (M - 1) for categorical levels.
  std::vector<double> quantile_levels;
  // Stored probe values: quantile values, or level codes.
  std::vector<double> probe_values;
  FeatureMatrix rows;
};

VariableQuantileMatrix BuildVariableQuantileMatrix(const Dataset& dataset,
                                                   const BaselineVector& baseline,
                                                   std::size_t feature,
                                                   const QuantileGrid& grid);

// Baseline-relative prediction change scaled by the range over the standard
// deviation (population variance) of the sweep:
//
//   effect_q = (y_q - f(baseline)) / sd(y) * (max(y) - min(y))
//
// A flat sweep yields all-zero effects.
std::vector<double> StandardizedEffects(std::span<const double> predictions,
                                        double baseline_prediction);

// Mean absolute standardized effect.
double ImportanceScore(std::span<const double> effects);

// Feature indices by descending score; ties keep ascending index order.
std::vector<std::size_t> RankByScore(std::span<const double> scores);

struct FeatureEffect {
  std::size_t feature = 0;
  std::vector<double> quantile_levels;
  std::vector<double> probe_values;
  std::vector<double> predictions;
  std::vector<double> effects;
  double importance = 0.0;
};

struct ExplainOptions {
  QuantileGrid grid = MakeQuantileGrid(kDefaultQuantiles);
  // Features are swept on this many threads; 0 picks the hardware count.
  // Results do not depend on the value.
  std::size_t threads = 1;
};

struct GlobalExplanation {
  std::shared_ptr<const Schema> schema;
  BaselineVector baseline;
  double baseline_prediction = 0.0;
  std::vector<FeatureEffect> effects;  // indexed by feature
  std::vector<std::size_t> ranking;
};

struct LocalExplanation {
  std::shared_ptr<const Schema> schema;
  std::size_t row = 0;
  std::vector<double> observation;  // stored encoding of the row
  double actual_prediction = 0.0;
  // predictions are raw model outputs; effects are relative to the
  // observation's own prediction and only drive the ordering.
  std::vector<FeatureEffect> effects;
  std::vector<double> observation_quantile;
  std::vector<std::size_t> ordering;
};

GlobalExplanation ExplainGlobal(const Predictor& model, const Dataset& dataset,
                                const ExplainOptions& options = {});

LocalExplanation ExplainLocal(const Predictor& model, const Dataset& dataset,
                              std::size_t row,
                              const ExplainOptions& options = {});

enum class ExplainScope { kGlobal, kLocal };

// Per-class explanations of P(class | x), plus the stacked importance
// S_j = sum over classes of the per-class importance.
struct ClassificationExplanation {
  ExplainScope scope = ExplainScope::kGlobal;
  std::vector<std::string> classes;
  std::vector<GlobalExplanation> global;  // filled when scope is kGlobal
  std::vector<LocalExplanation> local;    // filled when scope is kLocal
  std::vector<double> stacked_importance;
  std::vector<std::size_t> ranking;

  std::size_t n_features() const;
  // Importance of feature j for class c.
  double class_importance(std::size_t c, std::size_t j) const;
};

ClassificationExplanation ExplainClassification(const Predictor& model,
                                                const Dataset& dataset,
                                                ExplainScope scope,
                                                std::size_t row = 0,
                                                const ExplainOptions& options = {});

// Empirical CDF position of value within column, with ties split at the
// midpoint: (count_less + count_less_or_equal) / (2N). For categorical
// columns, the level position code / (M - 1).
double ObservationQuantile(const FeatureColumn& column, double value);

// Prediction for the observation with the listed features replaced. The
// observation must be a single row; it is not modified.
Predictions WhatIf(const Predictor& model, const FeatureMatrix& observation,
                   std::span<const std::pair<std::size_t, Cell>> edits);

Predictions WhatIf(const Predictor& model, const FeatureMatrix& observation,
                   std::size_t feature, const Cell& new_value);

}  // namespace acme

#endif  // ACME_ENGINE_HPP_
