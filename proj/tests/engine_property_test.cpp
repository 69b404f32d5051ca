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

// Randomized invariants of the quantile-perturbation engine, 100 cases each.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "acme/engine.hpp"
#include "acme/random.hpp"
#include "support/test_support.hpp"

namespace acme {
namespace {

using ::acme::testing::CountingModel;
using ::acme::testing::FnModel;
using ::acme::testing::ProbModel;

constexpr int kCases = 100;

// Mixed dataset: numeric columns on random scales, some categorical columns
// with 2 to 4 levels.
Dataset RandomMixed(Rng& rng, std::size_t n, std::size_t p) {
  std::vector<FeatureColumn> columns;
  for (std::size_t j = 0; j < p; ++j) {
    const std::string name = "f" + std::to_string(j);
    if (rng.Uniform() < 0.25) {
      const std::size_t m = 2 + rng.Index(3);
      std::vector<std::string> cells;
      for (std::size_t i = 0; i < n; ++i) {
        // First m rows cover every level so that M is exactly m.
        const std::size_t level = i < m ? i : rng.Index(m);
        cells.push_back("L" + std::to_string(level));
      }
      columns.push_back(FeatureColumn::Categorical(name, cells));
    } else {
      const double scale = 0.1 + 5.0 * rng.Uniform();
      const double offset = 10.0 * rng.Normal();
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(offset + scale * rng.Normal());
      columns.push_back(FeatureColumn::Numeric(name, v));
    }
  }
  return Dataset(std::move(columns));
}

// Random additive-plus-interaction function over stored cells. Features
// listed in ignored never influence the output.
struct RandomFunction {
  std::vector<int> shape;
  std::vector<double> weight;
  std::vector<double> level_table;  // per (feature, code) for categorical
  double interaction = 0.0;
  std::vector<bool> ignored;

  RandomFunction(Rng& rng, std::size_t p) {
    for (std::size_t j = 0; j < p; ++j) {
      shape.push_back(static_cast<int>(rng.Index(4)));
      weight.push_back(rng.Normal() * 3.0);
      ignored.push_back(rng.Uniform() < 0.2);
    }
    for (std::size_t i = 0; i < p * 8; ++i) level_table.push_back(rng.Normal());
    interaction = rng.Normal();
  }

  double operator()(const Schema& schema, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (ignored[j]) continue;
      double t = 0.0;
      if (schema[j].kind == FeatureKind::kCategorical) {
        t = level_table[j * 8 + static_cast<std::size_t>(x[j])];
      } else {
        switch (shape[j]) {
          case 0: t = x[j]; break;
          case 1: t = std::sin(x[j]); break;
          case 2: t = 0.1 * x[j] * x[j]; break;
          default: t = std::tanh(x[j]); break;
        }
      }
      s += weight[j] * t;
    }
    if (x.size() >= 2 && !ignored[0] && !ignored[1] &&
        schema[0].kind == FeatureKind::kNumeric && schema[1].kind == FeatureKind::kNumeric) {
      s += interaction * std::sin(x[0]) * std::cos(x[1]);
    }
    return s;
  }
};

ExplainOptions RandomOptions(Rng& rng) {
  return {MakeQuantileGrid(2 + rng.Index(30), rng.Uniform() < 0.3), 1};
}

TEST(EnginePropertyTest, QuantileMatrixRowsMatchBaselineOutsideSweptColumn) {
  Rng rng(101);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 5 + rng.Index(40), 2 + rng.Index(6));
    const ExplainOptions o = RandomOptions(rng);
    const BaselineVector b = rng.Uniform() < 0.5 ? GlobalBaseline(d)
                                                 : ObservationBaseline(d, rng.Index(d.n_rows()));
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      const auto z = BuildVariableQuantileMatrix(d, b, j, o.grid);
      const std::size_t expected =
          d.feature(j).is_numeric() ? o.grid.size() : d.feature(j).levels().size();
      ASSERT_EQ(z.rows.rows(), expected);
      for (std::size_t r = 0; r < z.rows.rows(); ++r) {
        for (std::size_t k = 0; k < d.n_features(); ++k) {
          if (k == j) {
            EXPECT_EQ(z.rows(r, k), z.probe_values[r]);
          } else {
            EXPECT_EQ(z.rows(r, k), b.entries[k]);
          }
        }
      }
    }
  }
}

TEST(EnginePropertyTest, EffectSignFollowsPredictionChange) {
  Rng rng(102);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 10 + rng.Index(30), 2 + rng.Index(5));
    const RandomFunction f(rng, d.n_features());
    const FnModel m(d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const GlobalExplanation g = ExplainGlobal(m, d, RandomOptions(rng));
    for (const auto& e : g.effects) {
      const double lo = *std::min_element(e.predictions.begin(), e.predictions.end());
      const double hi = *std::max_element(e.predictions.begin(), e.predictions.end());
      if (lo == hi) continue;
      for (std::size_t q = 0; q < e.effects.size(); ++q) {
        const double diff = e.predictions[q] - g.baseline_prediction;
        EXPECT_EQ(std::signbit(e.effects[q]) && e.effects[q] != 0.0,
                  std::signbit(diff) && diff != 0.0);
        EXPECT_EQ(e.effects[q] == 0.0, diff == 0.0);
      }
    }
  }
}

// Two rankings agree up to swaps between features whose scores are equal
// to within rounding.
void ExpectSameRanking(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const std::vector<double>& scores) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    const double x = scores[a[i]], y = scores[b[i]];
    EXPECT_NEAR(x, y, 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}))
        << "rank " << i << " differs beyond rounding";
  }
}

TEST(EnginePropertyTest, AffineOutputScalesEffects) {
  Rng rng(103);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 10 + rng.Index(30), 2 + rng.Index(6));
    const RandomFunction f(rng, d.n_features());
    double a = rng.Normal() * 5.0;
    if (std::abs(a) < 0.1) a = a < 0 ? -0.1 : 0.1;
    const double b = rng.Normal() * 100.0;
    const FnModel base(d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const FnModel moved(d.schema(),
                        [&](std::span<const double> x) { return a * f(*d.schema(), x) + b; });
    const ExplainOptions o = RandomOptions(rng);
    const GlobalExplanation g0 = ExplainGlobal(base, d, o);
    const GlobalExplanation g1 = ExplainGlobal(moved, d, o);
    std::vector<double> scores;
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      const auto& e0 = g0.effects[j];
      const auto& e1 = g1.effects[j];
      const double scale = 1e-9 * (1.0 + std::abs(a) * e0.importance + std::abs(b) * 1e-3);
      for (std::size_t q = 0; q < e0.effects.size(); ++q) {
        EXPECT_NEAR(e1.effects[q], a * e0.effects[q], scale);
      }
      EXPECT_NEAR(e1.importance, std::abs(a) * e0.importance, scale);
      scores.push_back(e0.importance);
    }
    ExpectSameRanking(g0.ranking, g1.ranking, scores);
  }
}

TEST(EnginePropertyTest, PermutingFeaturesPermutesImportance) {
  Rng rng(104);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 10 + rng.Index(30), 2 + rng.Index(6));
    const std::size_t p = d.n_features();
    const RandomFunction f(rng, p);
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = p; i > 1; --i) std::swap(perm[i - 1], perm[rng.Index(i)]);
    // Column k of the permuted dataset is column perm[k] of the original.
    const Dataset dp = d.SelectFeatures(perm);
    const FnModel m(d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const FnModel mp(dp.schema(), [&](std::span<const double> xp) {
      std::vector<double> x(p);
      for (std::size_t k = 0; k < p; ++k) x[perm[k]] = xp[k];
      return f(*d.schema(), x);
    });
    const ExplainOptions o = RandomOptions(rng);
    const GlobalExplanation g = ExplainGlobal(m, d, o);
    const GlobalExplanation gp = ExplainGlobal(mp, dp, o);
    for (std::size_t k = 0; k < p; ++k) {
      EXPECT_EQ(gp.effects[k].importance, g.effects[perm[k]].importance);
      EXPECT_EQ(gp.effects[k].effects, g.effects[perm[k]].effects);
    }
  }
}

TEST(EnginePropertyTest, IgnoredFeaturesScoreExactlyZero) {
  Rng rng(105);
  int checked = 0;
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 5 + rng.Index(30), 2 + rng.Index(6));
    const RandomFunction f(rng, d.n_features());
    const FnModel m(d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const ExplainOptions o = RandomOptions(rng);
    const GlobalExplanation g = ExplainGlobal(m, d, o);
    const LocalExplanation l = ExplainLocal(m, d, rng.Index(d.n_rows()), o);
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      if (!f.ignored[j]) continue;
      ++checked;
      EXPECT_EQ(g.effects[j].importance, 0.0);
      EXPECT_EQ(l.effects[j].importance, 0.0);
      for (double e : g.effects[j].effects) EXPECT_EQ(e, 0.0);
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(EnginePropertyTest, BinaryClassEffectsAreNegations) {
  Rng rng(106);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 10 + rng.Index(30), 2 + rng.Index(5));
    const RandomFunction f(rng, d.n_features());
    const ProbModel m(d.schema(), {"neg", "pos"}, [&](std::span<const double> x) {
      const double s = 1.0 / (1.0 + std::exp(-0.3 * f(*d.schema(), x)));
      return std::vector<double>{1.0 - s, s};
    });
    const ExplainScope scope = rng.Uniform() < 0.5 ? ExplainScope::kGlobal : ExplainScope::kLocal;
    const auto ce = ExplainClassification(m, d, scope, rng.Index(d.n_rows()), RandomOptions(rng));
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      const auto& e0 = scope == ExplainScope::kGlobal ? ce.global[0].effects[j] : ce.local[0].effects[j];
      const auto& e1 = scope == ExplainScope::kGlobal ? ce.global[1].effects[j] : ce.local[1].effects[j];
      for (std::size_t q = 0; q < e0.effects.size(); ++q) {
        // Complementary probabilities are negations up to the rounding of 1 - s.
        EXPECT_NEAR(e0.effects[q], -e1.effects[q], 1e-12);
      }
      EXPECT_NEAR(e0.importance, e1.importance, 1e-12);
    }
  }
}

TEST(EnginePropertyTest, PredictionCostIsOnePlusProbeCount) {
  Rng rng(107);
  for (int c = 0; c < kCases; ++c) {
    const std::size_t n = 5 + rng.Index(200);
    const Dataset d = RandomMixed(rng, n, 1 + rng.Index(8));
    const RandomFunction f(rng, d.n_features());
    auto inner = std::make_shared<FnModel>(
        d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const CountingModel m(inner);
    const ExplainOptions o = RandomOptions(rng);
    std::size_t expected = 1;
    for (const auto& col : d.features()) {
      expected += col.is_numeric() ? o.grid.size() : col.levels().size();
    }
    if (rng.Uniform() < 0.5) {
      ExplainGlobal(m, d, o);
    } else {
      ExplainLocal(m, d, rng.Index(n), o);
    }
    EXPECT_EQ(m.rows(), expected);
    EXPECT_EQ(m.calls(), 1 + d.n_features());
  }
}

TEST(EnginePropertyTest, LocalActualPredictionMatchesModel) {
  Rng rng(108);
  for (int c = 0; c < kCases; ++c) {
    const Dataset d = RandomMixed(rng, 5 + rng.Index(30), 1 + rng.Index(6));
    const RandomFunction f(rng, d.n_features());
    const FnModel m(d.schema(), [&](std::span<const double> x) { return f(*d.schema(), x); });
    const std::size_t row = rng.Index(d.n_rows());
    const LocalExplanation l = ExplainLocal(m, d, row, RandomOptions(rng));
    EXPECT_EQ(l.actual_prediction, PredictBatch(m, d.Row(row))(0, 0));
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      EXPECT_GE(l.observation_quantile[j], 0.0);
      EXPECT_LE(l.observation_quantile[j], 1.0);
      const auto& e = l.effects[j];
      EXPECT_EQ(e.predictions.size(), e.effects.size());
      EXPECT_EQ(e.quantile_levels.size(), e.effects.size());
    }
    std::vector<double> scores;
    for (const auto& e : l.effects) scores.push_back(e.importance);
    for (std::size_t i = 1; i < l.ordering.size(); ++i) {
      EXPECT_GE(scores[l.ordering[i - 1]], scores[l.ordering[i]]);
    }
  }
}

}  // namespace
}  // namespace acme
