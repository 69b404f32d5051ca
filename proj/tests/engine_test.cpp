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

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "acme/engine.hpp"
#include "acme/error.hpp"
#include "acme/model.hpp"
#include "support/test_support.hpp"

namespace acme {
namespace {

using ::acme::testing::CountingModel;
using ::acme::testing::FnModel;
using ::acme::testing::NumericDataset;
using ::acme::testing::ProbModel;

TEST(VariableQuantileMatrixTest, ReplacesOnlyTheSweptColumn) {
  const Dataset d = NumericDataset({{1, 1}, {0, 5}, {3, 3}});
  BaselineVector b;
  b.entries = {1, 2, 3};
  const auto z = BuildVariableQuantileMatrix(d, b, 1, MakeQuantileGrid(2));
  EXPECT_EQ(z.probe_values, (std::vector<double>{0, 5}));
  ASSERT_EQ(z.rows.rows(), 2u);
  EXPECT_EQ(std::vector<double>(z.rows.data().begin(), z.rows.data().end()),
            (std::vector<double>{1, 0, 3, 1, 5, 3}));
}

TEST(VariableQuantileMatrixTest, CategoricalSweepsLevels) {
  const Dataset d({FeatureColumn::Categorical("c", {"x", "y", "x"}),
                   FeatureColumn::Numeric("v", {7, 7, 7})});
  const BaselineVector b = GlobalBaseline(d);
  const auto z = BuildVariableQuantileMatrix(d, b, 0, MakeQuantileGrid(50));
  ASSERT_EQ(z.rows.rows(), 2u);
  EXPECT_EQ(d.schema()->Decode(0, z.rows(0, 0)), Cell(std::string("x")));
  EXPECT_EQ(d.schema()->Decode(0, z.rows(1, 0)), Cell(std::string("y")));
  EXPECT_EQ(z.rows(0, 1), 7.0);
  EXPECT_EQ(z.rows(1, 1), 7.0);
  EXPECT_EQ(z.quantile_levels, (std::vector<double>{0, 1}));
}

TEST(VariableQuantileMatrixTest, ProbesAreEmpiricalQuantiles) {
  const Dataset d = NumericDataset({{20, 0, 10}});
  const auto z = BuildVariableQuantileMatrix(d, GlobalBaseline(d), 0, MakeQuantileGrid(3));
  EXPECT_EQ(z.probe_values, (std::vector<double>{0, 10, 20}));
  EXPECT_THROW(BuildVariableQuantileMatrix(d, GlobalBaseline(d), 1, MakeQuantileGrid(3)),
               Error);
}

TEST(StandardizedEffectsTest, FlatSweepIsZero) {
  const std::vector<double> y = {5, 5, 5};
  EXPECT_EQ(StandardizedEffects(y, 5), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(StandardizedEffects(y, 1), (std::vector<double>{0, 0, 0}));
}

TEST(StandardizedEffectsTest, HandComputedValues) {
  // var = 2/3, range = 2, factor = 2 / sqrt(2/3) = sqrt(6).
  const std::vector<double> y = {1, 2, 3};
  const double f = std::sqrt(6.0);
  const auto a = StandardizedEffects(y, 2);
  EXPECT_NEAR(a[0], -f, 1e-12);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_NEAR(a[2], f, 1e-12);
  EXPECT_NEAR(a[2], 2.4495, 1e-4);
  const auto b = StandardizedEffects(y, 1);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_NEAR(b[1], 2.4495, 1e-4);
  EXPECT_NEAR(b[2], 4.8990, 1e-4);
}

TEST(StandardizedEffectsTest, NeedsTwoPredictions) {
  const std::vector<double> y = {1};
  EXPECT_THROW(StandardizedEffects(y, 0), Error);
}

TEST(RankByScoreTest, DescendingWithIndexTieBreak) {
  const std::vector<double> s = {1, 3, 3, 0, 2};
  EXPECT_EQ(RankByScore(s), (std::vector<std::size_t>{1, 2, 4, 0, 3}));
}

TEST(ExplainGlobalTest, IgnoredFeatureScoresZero) {
  const Dataset d = NumericDataset({{1, 4, 2, 8}, {3, 1, 4, 1}});
  const FnModel m(d.schema(), [](std::span<const double> x) { return x[0]; });
  const GlobalExplanation g = ExplainGlobal(m, d);
  EXPECT_GT(g.effects[0].importance, 0.0);
  EXPECT_EQ(g.effects[1].importance, 0.0);
  EXPECT_EQ(g.ranking, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(g.baseline.entries, (std::vector<double>{3.75, 2.25}));
  EXPECT_EQ(g.baseline_prediction, 3.75);
}

TEST(ExplainGlobalTest, ConstantModelKeepsIndexOrder) {
  const Dataset d = NumericDataset({{1, 2}, {3, 4}, {5, 7}});
  const FnModel m(d.schema(), [](std::span<const double>) { return 4.0; });
  const GlobalExplanation g = ExplainGlobal(m, d);
  for (const auto& e : g.effects) EXPECT_EQ(e.importance, 0.0);
  EXPECT_EQ(g.ranking, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ExplainGlobalTest, ImportanceIsMeanAbsoluteEffect) {
  const Dataset d = NumericDataset({{1, 4, 2, 8, 5}, {3, 1, 4, 1, 5}});
  const FnModel m(d.schema(), [](std::span<const double> x) {
    return x[0] * x[0] - 3 * x[1];
  });
  const GlobalExplanation g = ExplainGlobal(m, d, {MakeQuantileGrid(7), 1});
  for (const auto& e : g.effects) {
    ASSERT_EQ(e.effects.size(), 7u);
    ASSERT_EQ(e.predictions.size(), 7u);
    double sum = 0.0;
    for (double v : e.effects) sum += std::abs(v);
    EXPECT_EQ(e.importance, sum / 7.0);
  }
}

TEST(ExplainGlobalTest, ThreadCountDoesNotChangeResults) {
  Rng rng(2);
  const Dataset d = ::acme::testing::RandomDataset(rng, 60, 9);
  const FnModel m(d.schema(), [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += std::sin(x[j] * (1.0 + j));
    return s;
  });
  const GlobalExplanation a = ExplainGlobal(m, d, {MakeQuantileGrid(20), 1});
  const GlobalExplanation b = ExplainGlobal(m, d, {MakeQuantileGrid(20), 4});
  ASSERT_EQ(a.ranking, b.ranking);
  for (std::size_t j = 0; j < 9; ++j) {
    EXPECT_EQ(a.effects[j].effects, b.effects[j].effects);
    EXPECT_EQ(a.effects[j].importance, b.effects[j].importance);
  }
}

TEST(ExplainGlobalTest, RejectsClassifier) {
  const Dataset d = NumericDataset({{0, 1}});
  const ProbModel m(d.schema(), {"a", "b"},
                    [](std::span<const double>) { return std::vector<double>{0.5, 0.5}; });
  try {
    ExplainGlobal(m, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTask);
  }
  const FnModel r(d.schema(), [](std::span<const double>) { return 0.0; });
  EXPECT_THROW(ExplainClassification(r, d, ExplainScope::kGlobal), Error);
}

TEST(ExplainGlobalTest, CostIsOnePlusProbeRows) {
  const Dataset d({FeatureColumn::Numeric("a", {1, 2, 3, 4}),
                   FeatureColumn::Categorical("c", {"x", "y", "z", "x"}),
                   FeatureColumn::Numeric("b", {0, 0, 1, 1})});
  auto inner = std::make_shared<FnModel>(d.schema(), [](std::span<const double> x) {
    return x[0] + x[1] + x[2];
  });
  const CountingModel m(inner);
  ExplainGlobal(m, d, {MakeQuantileGrid(10), 1});
  EXPECT_EQ(m.rows(), 1u + 10u + 3u + 10u);
  EXPECT_EQ(m.calls(), 4u);
}

TEST(ExplainLocalTest, ProbeAtObservedValueReproducesPrediction) {
  // With Q = 5 on a 5-row column every row value is a probe.
  const Dataset d = NumericDataset({{4, 1, 3, 5, 2}, {10, 20, 30, 40, 50}});
  const FnModel m(d.schema(), [](std::span<const double> x) { return x[0] * x[1]; });
  const LocalExplanation l = ExplainLocal(m, d, 2, {MakeQuantileGrid(5), 1});
  EXPECT_EQ(l.actual_prediction, 90.0);
  EXPECT_EQ(l.observation, (std::vector<double>{3, 30}));
  EXPECT_EQ(l.effects[0].probe_values[2], 3.0);
  EXPECT_EQ(l.effects[0].predictions[2], l.actual_prediction);
  EXPECT_EQ(l.effects[1].probe_values[2], 30.0);
  EXPECT_EQ(l.effects[1].predictions[2], l.actual_prediction);
}

TEST(ExplainLocalTest, ObservationQuantileAtColumnMax) {
  const Dataset d = NumericDataset({{3, 9, 1, 4, 7}});
  const FnModel m(d.schema(), [](std::span<const double> x) { return x[0]; });
  const LocalExplanation l = ExplainLocal(m, d, 1);
  EXPECT_GE(l.observation_quantile[0], 1.0 - 1.0 / 5.0);
  EXPECT_LE(l.observation_quantile[0], 1.0);
}

TEST(ExplainLocalTest, LinearProbesAtExtremes) {
  const Dataset d = NumericDataset({{-2, 0, 1, 5, 9}});
  const FnModel m(d.schema(), [](std::span<const double> x) { return 2 * x[0]; });
  const LocalExplanation l = ExplainLocal(m, d, 2);  // the median row
  EXPECT_EQ(l.effects[0].predictions.front(), -4.0);
  EXPECT_EQ(l.effects[0].predictions.back(), 18.0);
  EXPECT_EQ(l.actual_prediction, 2.0);
}

TEST(ExplainLocalTest, RowOutOfRange) {
  const Dataset d = NumericDataset({{1, 2}});
  const FnModel m(d.schema(), [](std::span<const double> x) { return x[0]; });
  EXPECT_THROW(ExplainLocal(m, d, 2), Error);
}

TEST(ObservationQuantileTest, MidpointTies) {
  const auto c = FeatureColumn::Numeric("c", {1, 2, 2, 3});
  EXPECT_DOUBLE_EQ(ObservationQuantile(c, 2), (1.0 + 3.0) / 8.0);
  EXPECT_DOUBLE_EQ(ObservationQuantile(c, 1), 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(ObservationQuantile(c, 3), 7.0 / 8.0);
  const auto k = FeatureColumn::Categorical("k", {"a", "b", "c"});
  EXPECT_DOUBLE_EQ(ObservationQuantile(k, 1), 0.5);
}

TEST(ExplainClassificationTest, BinaryEffectsAreNegations) {
  const Dataset d = NumericDataset({{-1, 0.5, 2, -3, 1}, {4, 1, 0, 2, 2}});
  const ProbModel m(d.schema(), {"no", "yes"}, [](std::span<const double> x) {
    const double s = 1.0 / (1.0 + std::exp(-(x[0] - 0.2 * x[1])));
    return std::vector<double>{1.0 - s, s};
  });
  const ClassificationExplanation c = ExplainClassification(m, d, ExplainScope::kGlobal);
  ASSERT_EQ(c.global.size(), 2u);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto& e0 = c.global[0].effects[j].effects;
    const auto& e1 = c.global[1].effects[j].effects;
    for (std::size_t q = 0; q < e0.size(); ++q) EXPECT_NEAR(e0[q], -e1[q], 1e-12);
  }
}

TEST(ExplainClassificationTest, IgnoredFeatureIsZeroForEveryClass) {
  const Dataset d = NumericDataset({{-1, 0.5, 2, -3}, {4, 1, 0, 2}});
  const ProbModel m(d.schema(), {"a", "b", "c"}, [](std::span<const double> x) {
    const double u = std::exp(x[0]), v = std::exp(-x[0]), w = 1.0;
    const double z = u + v + w;
    return std::vector<double>{u / z, v / z, w / z};
  });
  for (ExplainScope scope : {ExplainScope::kGlobal, ExplainScope::kLocal}) {
    const auto c = ExplainClassification(m, d, scope, 1);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c.class_importance(k, 1), 0.0);
    EXPECT_EQ(c.stacked_importance[1], 0.0);
    EXPECT_EQ(c.ranking[0], 0u);
  }
}

TEST(ExplainClassificationTest, StackedImportanceIsSumOfClasses) {
  // Three Gaussian blobs in two dimensions.
  Rng rng(17);
  std::vector<double> a, b;
  std::vector<std::string> y;
  const double cx[] = {0, 4, 0}, cy[] = {0, 0, 4};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 20; ++i) {
      a.push_back(cx[k] + rng.Normal());
      b.push_back(cy[k] + rng.Normal());
      y.push_back(std::string(1, static_cast<char>('p' + k)));
    }
  }
  const Dataset d({FeatureColumn::Numeric("a", a), FeatureColumn::Numeric("b", b)},
                  FeatureColumn::Categorical("y", y));
  const ClassLabels labels = ExtractClassLabels(d);
  const KnnModel m = FitKnn(d.Matrix(), labels.indices, 7, Task::Classification(labels.names));
  const auto c = ExplainClassification(m, d, ExplainScope::kGlobal, 0, {MakeQuantileGrid(20), 1});
  ASSERT_EQ(c.classes.size(), 3u);
  for (std::size_t j = 0; j < 2; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      double mean_abs = 0.0;
      for (double e : c.global[k].effects[j].effects) mean_abs += std::abs(e);
      sum += mean_abs / 20.0;
    }
    EXPECT_NEAR(c.stacked_importance[j], sum, 1e-12);
  }
}

TEST(WhatIfTest, SameValueReproducesPrediction) {
  const Dataset d = NumericDataset({{1.3, 2.7}, {0.1, 5.5}});
  const LinearModel m(d.schema(), {0.7, -1.1}, 0.25);
  const FeatureMatrix x = d.Row(1);
  const double actual = PredictBatch(m, x)(0, 0);
  EXPECT_EQ(WhatIf(m, x, 0, Cell(x(0, 0)))(0, 0), actual);
}

TEST(WhatIfTest, LinearBumpMovesByCoefTimesDelta) {
  const Dataset d = NumericDataset({{1.3, 2.7}, {0.1, 5.5}});
  const LinearModel m(d.schema(), {0.7, -1.1}, 0.25);
  const FeatureMatrix x = d.Row(0);
  const double actual = PredictBatch(m, x)(0, 0);
  for (double delta : {-3.0, 0.5, 1e-3, 100.0}) {
    const double moved = WhatIf(m, x, 1, Cell(x(0, 1) + delta))(0, 0);
    EXPECT_NEAR(moved - actual, -1.1 * delta, 1e-12 * (1.0 + std::abs(delta)));
  }
  // The observation itself is untouched.
  EXPECT_EQ(x(0, 1), 0.1);
}

TEST(WhatIfTest, ClassifierRowSumsToOneAndKindIsChecked) {
  const Dataset d({FeatureColumn::Categorical("c", {"x", "y"}),
                   FeatureColumn::Numeric("v", {1, 2})});
  const ProbModel m(d.schema(), {"a", "b"}, [](std::span<const double> x) {
    const double s = x[0] == 1.0 ? 0.9 : 0.2;
    return std::vector<double>{1 - s, s};
  });
  const Predictions p = WhatIf(m, d.Row(0), 0, Cell(std::string("y")));
  EXPECT_NEAR(p(0, 0) + p(0, 1), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.9);
  try {
    WhatIf(m, d.Row(0), 0, Cell(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKind);
  }
}

}  // namespace
}  // namespace acme
