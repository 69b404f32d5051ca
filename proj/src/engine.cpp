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

#include "acme/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acme/error.hpp"
#include "parallel.hpp"

namespace acme {
namespace {

struct Sweep {
  VariableQuantileMatrix matrix;
  Predictions predictions;
};

struct SweepSet {
  Predictions baseline;  // 1 x width
  std::vector<Sweep> sweeps;
};

SweepSet RunSweeps(const Predictor& model, const Dataset& dataset,
                   const BaselineVector& baseline,
                   const ExplainOptions& options) {
  SweepSet set;
  const FeatureMatrix base_row(dataset.schema(), 1, baseline.entries);
  set.baseline = PredictBatch(model, base_row);
  set.sweeps.resize(dataset.n_features(),
                    Sweep{{0, {}, {}, FeatureMatrix(dataset.schema(), 0)}, {}});
  internal::ParallelFor(dataset.n_features(), options.threads, [&](std::size_t j) {
    Sweep& sweep = set.sweeps[j];
    sweep.matrix = BuildVariableQuantileMatrix(dataset, baseline, j, options.grid);
    sweep.predictions = PredictBatch(model, sweep.matrix.rows);
  });
  return set;
}

FeatureEffect SliceEffect(const Sweep& sweep, std::size_t output,
                          double reference) {
  FeatureEffect effect;
  effect.feature = sweep.matrix.feature;
  effect.quantile_levels = sweep.matrix.quantile_levels;
  effect.probe_values = sweep.matrix.probe_values;
  effect.predictions = sweep.predictions.Column(output);
  effect.effects = StandardizedEffects(effect.predictions, reference);
  effect.importance = ImportanceScore(effect.effects);
  return effect;
}

GlobalExplanation GlobalFromSweeps(const Dataset& dataset,
                                   const BaselineVector& baseline,
                                   const SweepSet& set, std::size_t output) {
  GlobalExplanation g;
  g.schema = dataset.schema();
  g.baseline = baseline;
  g.baseline_prediction = set.baseline(0, output);
  std::vector<double> scores;
  for (const Sweep& sweep : set.sweeps) {
    g.effects.push_back(SliceEffect(sweep, output, g.baseline_prediction));
    scores.push_back(g.effects.back().importance);
  }
  g.ranking = RankByScore(scores);
  return g;
}

LocalExplanation LocalFromSweeps(const Dataset& dataset, std::size_t row,
                                 const BaselineVector& baseline,
                                 const SweepSet& set, std::size_t output) {
  LocalExplanation l;
  l.schema = dataset.schema();
  l.row = row;
  l.observation = baseline.entries;
  l.actual_prediction = set.baseline(0, output);
  std::vector<double> scores;
  for (const Sweep& sweep : set.sweeps) {
    l.effects.push_back(SliceEffect(sweep, output, l.actual_prediction));
    scores.push_back(l.effects.back().importance);
  }
  for (std::size_t j = 0; j < dataset.n_features(); ++j) {
    l.observation_quantile.push_back(
        ObservationQuantile(dataset.feature(j), l.observation[j]));
  }
  l.ordering = RankByScore(scores);
  return l;
}

void RequireRegression(const Predictor& model) {
  if (model.task().is_classification()) {
    Fail(ErrorCode::kTask,
         "regression explanation requested for a classification model");
  }
}

}  // namespace

VariableQuantileMatrix BuildVariableQuantileMatrix(const Dataset& dataset,
                                                   const BaselineVector& baseline,
                                                   std::size_t feature,
                                                   const QuantileGrid& grid) {
  if (feature >= dataset.n_features()) {
    Fail(ErrorCode::kInvalidArgument,
         "feature index " + std::to_string(feature) + " out of range");
  }
  if (baseline.entries.size() != dataset.n_features()) {
    Fail(ErrorCode::kShape, "baseline length does not match feature count");
  }
  const FeatureColumn& column = dataset.feature(feature);
  VariableQuantileMatrix out{feature, {}, {}, FeatureMatrix(dataset.schema(), 0)};
  if (column.is_numeric()) {
    std::vector<double> sorted(column.values().begin(), column.values().end());
    std::sort(sorted.begin(), sorted.end());
    out.quantile_levels = grid.levels;
    for (double q : grid.levels) {
      out.probe_values.push_back(QuantileOfSorted(sorted, q));
    }
  } else {
    const std::size_t m = column.levels().size();
    for (std::size_t i = 0; i < m; ++i) {
      out.quantile_levels.push_back(
          m > 1 ? static_cast<double>(i) / static_cast<double>(m - 1) : 0.0);
      out.probe_values.push_back(static_cast<double>(i));
    }
  }
  const std::size_t n = out.probe_values.size();
  const std::size_t p = dataset.n_features();
  std::vector<double> cells;
  cells.reserve(n * p);
  for (std::size_t r = 0; r < n; ++r) {
    cells.insert(cells.end(), baseline.entries.begin(), baseline.entries.end());
    cells[r * p + feature] = out.probe_values[r];
  }
  out.rows = FeatureMatrix(dataset.schema(), n, std::move(cells));
  return out;
}

std::vector<double> StandardizedEffects(std::span<const double> predictions,
                                        double baseline_prediction) {
  if (predictions.size() < 2) {
    Fail(ErrorCode::kDomain, "standardized effects need at least 2 predictions");
  }
  const auto n = static_cast<double>(predictions.size());
  const auto [lo, hi] = std::minmax_element(predictions.begin(), predictions.end());
  const double range = *hi - *lo;
  std::vector<double> effects(predictions.size(), 0.0);
  if (range == 0.0) return effects;
  const double mean =
      std::accumulate(predictions.begin(), predictions.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : predictions) ss += (y - mean) * (y - mean);
  const double variance = ss / n;
  if (variance == 0.0) return effects;
  const double scale = range / std::sqrt(variance);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    effects[i] = (predictions[i] - baseline_prediction) * scale;
  }
  return effects;
}

double ImportanceScore(std::span<const double> effects) {
  if (effects.empty()) return 0.0;
  double sum = 0.0;
  for (double e : effects) sum += std::abs(e);
  return sum / static_cast<double>(effects.size());
}

std::vector<std::size_t> RankByScore(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

GlobalExplanation ExplainGlobal(const Predictor& model, const Dataset& dataset,
                                const ExplainOptions& options) {
  RequireRegression(model);
  const BaselineVector baseline = GlobalBaseline(dataset);
  const SweepSet set = RunSweeps(model, dataset, baseline, options);
  return GlobalFromSweeps(dataset, baseline, set, 0);
}

LocalExplanation ExplainLocal(const Predictor& model, const Dataset& dataset,
                              std::size_t row, const ExplainOptions& options) {
  RequireRegression(model);
  const BaselineVector baseline = ObservationBaseline(dataset, row);
  const SweepSet set = RunSweeps(model, dataset, baseline, options);
  return LocalFromSweeps(dataset, row, baseline, set, 0);
}

std::size_t ClassificationExplanation::n_features() const {
  return stacked_importance.size();
}

double ClassificationExplanation::class_importance(std::size_t c,
                                                   std::size_t j) const {
  return scope == ExplainScope::kGlobal ? global.at(c).effects.at(j).importance
                                        : local.at(c).effects.at(j).importance;
}

ClassificationExplanation ExplainClassification(const Predictor& model,
                                                const Dataset& dataset,
                                                ExplainScope scope,
                                                std::size_t row,
                                                const ExplainOptions& options) {
  if (!model.task().is_classification()) {
    Fail(ErrorCode::kTask,
         "classification explanation requested for a regression model");
  }
  ClassificationExplanation out;
  out.scope = scope;
  out.classes = model.task().class_names;
  const BaselineVector baseline = scope == ExplainScope::kGlobal
                                      ? GlobalBaseline(dataset)
                                      : ObservationBaseline(dataset, row);
  const SweepSet set = RunSweeps(model, dataset, baseline, options);
  out.stacked_importance.assign(dataset.n_features(), 0.0);
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    if (scope == ExplainScope::kGlobal) {
      out.global.push_back(GlobalFromSweeps(dataset, baseline, set, c));
    } else {
      out.local.push_back(LocalFromSweeps(dataset, row, baseline, set, c));
    }
    for (std::size_t j = 0; j < dataset.n_features(); ++j) {
      out.stacked_importance[j] += out.class_importance(c, j);
    }
  }
  out.ranking = RankByScore(out.stacked_importance);
  return out;
}

double ObservationQuantile(const FeatureColumn& column, double value) {
  if (!column.is_numeric()) {
    const std::size_t m = column.levels().size();
    return m > 1 ? value / static_cast<double>(m - 1) : 0.0;
  }
  std::size_t less = 0;
  std::size_t less_equal = 0;
  for (double v : column.values()) {
    less += v < value ? 1 : 0;
    less_equal += v <= value ? 1 : 0;
  }
  return static_cast<double>(less + less_equal) /
         (2.0 * static_cast<double>(column.size()));
}

Predictions WhatIf(const Predictor& model, const FeatureMatrix& observation,
                   std::span<const std::pair<std::size_t, Cell>> edits) {
  if (observation.rows() != 1) {
    Fail(ErrorCode::kShape, "what-if needs exactly one observation row");
  }
  FeatureMatrix edited = observation;
  for (const auto& [feature, value] : edits) {
    edited(0, feature) = observation.schema().Encode(feature, value);
  }
  return PredictBatch(model, edited);
}

Predictions WhatIf(const Predictor& model, const FeatureMatrix& observation,
                   std::size_t feature, const Cell& new_value) {
  const std::pair<std::size_t, Cell> edit{feature, new_value};
  return WhatIf(model, observation, std::span(&edit, 1));
}

}  // namespace acme
