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

#include "acme/kernel_shap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "acme/engine.hpp"
#include "acme/error.hpp"
#include "parallel.hpp"

namespace acme {
namespace {

constexpr double kSolverTolerance = 1e-10;
constexpr std::uint64_t kEnumerateLimit = std::uint64_t{1} << 20;

// C(n, k), saturating at UINT64_MAX.
std::uint64_t Binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::uint64_t factor = n - k + i;
    if (result > UINT64_MAX / factor) return UINT64_MAX;
    result = result * factor / i;  // exact: result * factor is divisible by i
  }
  return result;
}

Coalition MakeCoalition(std::vector<std::uint8_t> mask) {
  Coalition c;
  c.size = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  c.weight = ShapKernelWeight(mask.size(), c.size);
  c.mask = std::move(mask);
  return c;
}

// All size-s masks over p features in lexicographic order of the chosen
// index tuples.
std::vector<std::vector<std::uint8_t>> EnumerateLayer(std::size_t p,
                                                      std::size_t s) {
  std::vector<std::vector<std::uint8_t>> out;
  std::vector<std::size_t> idx(s);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<std::uint8_t> mask(p, 0);
    for (std::size_t i : idx) mask[i] = 1;
    out.push_back(std::move(mask));
    std::size_t i = s;
    while (i > 0 && idx[i - 1] == p - s + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t k = i; k < s; ++k) idx[k] = idx[k - 1] + 1;
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> SampleLayer(std::size_t p, std::size_t s,
                                                   std::size_t count, Rng& rng) {
  const std::uint64_t layer = Binomial(p, s);
  std::vector<std::vector<std::uint8_t>> out;
  if (layer <= kEnumerateLimit) {
    auto all = EnumerateLayer(p, s);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t pick = i + rng.Index(all.size() - i);
      std::swap(all[i], all[pick]);
      out.push_back(std::move(all[i]));
    }
    return out;
  }
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<std::size_t> features(p);
  while (out.size() < count) {
    std::iota(features.begin(), features.end(), 0);
    std::vector<std::uint8_t> mask(p, 0);
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t pick = i + rng.Index(p - i);
      std::swap(features[i], features[pick]);
      mask[features[i]] = 1;
    }
    if (seen.insert(mask).second) out.push_back(std::move(mask));
  }
  return out;
}

std::vector<std::size_t> LayerOrder(std::size_t p) {
  std::vector<std::size_t> order;
  for (std::size_t s = 1; 2 * s <= p; ++s) {
    order.push_back(s);
    if (p - s != s) order.push_back(p - s);
  }
  return order;
}

// Solves the constrained weighted least squares for one explained row. The
// last feature is eliminated through sum(phi) = fx - phi0.
std::vector<double> FitExplanation(const std::vector<Coalition>& coalitions,
                                   std::span<const double> values, double fx,
                                   double phi0) {
  const std::size_t p = coalitions.front().mask.size();
  const double total = fx - phi0;
  if (p == 1) return {total};
  const std::size_t d = p - 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd a(d);
  std::size_t used = 0;
  for (std::size_t c = 0; c < coalitions.size(); ++c) {
    const Coalition& z = coalitions[c];
    if (!std::isfinite(z.weight)) continue;
    const double last = z.mask[p - 1];
    for (std::size_t j = 0; j < d; ++j) a[j] = z.mask[j] - last;
    const double target = values[c] - phi0 - last * total;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a, z.weight);
    rhs += z.weight * target * a;
    ++used;
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double largest = gram.diagonal().maxCoeff();
  if (used == 0 || ldlt.info() != Eigen::Success || !(largest > 0.0) ||
      ldlt.vectorD().minCoeff() <= kSolverTolerance * largest) {
    std::string sizes;
    std::set<std::size_t> seen;
    for (const Coalition& z : coalitions) {
      if (seen.insert(z.size).second) sizes += (sizes.empty() ? "" : ",") + std::to_string(z.size);
    }
    Fail(ErrorCode::kSingular,
         "singular weighted system for " + std::to_string(coalitions.size()) +
             " coalitions over " + std::to_string(p) +
             " features (sizes {" + sizes + "})");
  }
  const Eigen::VectorXd solution = ldlt.solve(rhs);
  std::vector<double> phi(p);
  double partial = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    phi[j] = solution[j];
    partial += solution[j];
  }
  phi[p - 1] = total - partial;
  return phi;
}

}  // namespace

double ShapKernelWeight(std::size_t p, std::size_t size) {
  if (size > p) {
    Fail(ErrorCode::kDomain, "coalition size " + std::to_string(size) +
                                 " exceeds feature count " + std::to_string(p));
  }
  if (size == 0 || size == p) return std::numeric_limits<double>::infinity();
  const double binom = static_cast<double>(Binomial(p, size));
  return static_cast<double>(p - 1) /
         (binom * static_cast<double>(size) * static_cast<double>(p - size));
}

std::vector<Coalition> SampleCoalitions(std::size_t p, std::size_t budget,
                                        std::uint64_t seed) {
  if (p == 0) Fail(ErrorCode::kDomain, "coalitions need at least one feature");
  if (budget < 2) Fail(ErrorCode::kDomain, "coalition budget must be >= 2");
  std::vector<Coalition> out;
  out.push_back(MakeCoalition(std::vector<std::uint8_t>(p, 0)));
  out.push_back(MakeCoalition(std::vector<std::uint8_t>(p, 1)));
  std::size_t remaining = budget - 2;
  Rng rng(seed);
  for (std::size_t s : LayerOrder(p)) {
    if (remaining == 0) break;
    const std::uint64_t layer = Binomial(p, s);
    if (layer <= remaining) {
      for (auto& mask : EnumerateLayer(p, s)) out.push_back(MakeCoalition(std::move(mask)));
      remaining -= static_cast<std::size_t>(layer);
    } else {
      for (auto& mask : SampleLayer(p, s, remaining, rng)) {
        out.push_back(MakeCoalition(std::move(mask)));
      }
      remaining = 0;
    }
  }
  return out;
}

std::vector<double> MapCoalition(std::span<const double> x,
                                 std::span<const std::uint8_t> mask,
                                 std::span<const double> background_row) {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = mask[j] ? x[j] : background_row[j];
  }
  return out;
}

std::vector<double> MapCoalition(std::span<const double> x,
                                 std::span<const std::uint8_t> mask,
                                 const FeatureMatrix& background, Rng& rng) {
  if (background.rows() == 0) Fail(ErrorCode::kShape, "empty background");
  return MapCoalition(x, mask, background.row(rng.Index(background.rows())));
}

GlobalShap KernelShapExplain(const Predictor& model, const Dataset& dataset,
                             const KernelShapOptions& options) {
  const std::size_t p = dataset.n_features();
  const std::size_t budget =
      options.coalitions == 0 ? DefaultCoalitionBudget(p) : options.coalitions;
  if (budget < 2) Fail(ErrorCode::kDomain, "coalition budget must be >= 2");
  if (!options.exhaustive_background && options.draws == 0) {
    Fail(ErrorCode::kDomain, "background draws per coalition must be >= 1");
  }
  if (options.output >= model.task().output_width()) {
    Fail(ErrorCode::kInvalidArgument, "output index out of range");
  }

  std::vector<std::size_t> rows = options.rows;
  if (rows.empty()) {
    rows.resize(dataset.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
  }
  const FeatureMatrix background = dataset.Matrix();
  const Predictions background_predictions = PredictBatch(model, background);
  double phi0 = 0.0;
  for (std::size_t i = 0; i < background.rows(); ++i) {
    phi0 += background_predictions(i, options.output);
  }
  phi0 /= static_cast<double>(background.rows());

  GlobalShap result;
  result.per_row.resize(rows.size());
  internal::ParallelFor(rows.size(), options.threads, [&](std::size_t k) {
    const std::size_t row = rows[k];
    const FeatureMatrix x = dataset.Row(row);
    const std::uint64_t row_seed = MixSeed(options.seed, row);
    const std::vector<Coalition> coalitions = SampleCoalitions(p, budget, row_seed);
    Rng draws(MixSeed(row_seed, 1));

    const std::size_t per = options.exhaustive_background ? background.rows()
                                                          : options.draws;
    std::vector<std::size_t> evaluated;
    for (std::size_t c = 0; c < coalitions.size(); ++c) {
      if (std::isfinite(coalitions[c].weight)) evaluated.push_back(c);
    }
    FeatureMatrix batch(dataset.schema(), evaluated.size() * per + 1);
    std::size_t r = 0;
    for (std::size_t c : evaluated) {
      const auto& mask = coalitions[c].mask;
      for (std::size_t t = 0; t < per; ++t, ++r) {
        const std::size_t bg = options.exhaustive_background
                                   ? t
                                   : draws.Index(background.rows());
        const auto imputed = MapCoalition(x.row(0), mask, background.row(bg));
        std::copy(imputed.begin(), imputed.end(), batch.row(r).begin());
      }
    }
    std::copy(x.row(0).begin(), x.row(0).end(), batch.row(r).begin());
    const Predictions out = PredictBatch(model, batch);
    const double fx = out(r, options.output);

    std::vector<double> values(coalitions.size(), 0.0);
    r = 0;
    for (std::size_t c : evaluated) {
      double sum = 0.0;
      for (std::size_t t = 0; t < per; ++t, ++r) sum += out(r, options.output);
      values[c] = sum / static_cast<double>(per);
    }
    ShapleyAttribution& attribution = result.per_row[k];
    attribution.row_index = row;
    attribution.phi0 = phi0;
    attribution.phi = FitExplanation(coalitions, values, fx, phi0);
  });

  result.importance.assign(p, 0.0);
  for (const auto& a : result.per_row) {
    for (std::size_t j = 0; j < p; ++j) result.importance[j] += std::abs(a.phi[j]);
  }
  result.ranking = RankByScore(result.importance);
  return result;
}

std::vector<double> ExactShapley(const Predictor& model, const FeatureMatrix& x,
                                 const FeatureMatrix& background,
                                 std::size_t output, std::size_t feature_limit) {
  const std::size_t p = x.cols();
  if (p > feature_limit) {
    Fail(ErrorCode::kDomain, "exact Shapley refuses " + std::to_string(p) +
                                 " features (limit " +
                                 std::to_string(feature_limit) + ")");
  }
  if (x.rows() != 1) Fail(ErrorCode::kShape, "exact Shapley explains one row");
  if (background.rows() == 0) Fail(ErrorCode::kShape, "empty background");

  const std::size_t subsets = std::size_t{1} << p;
  const std::size_t n = background.rows();
  std::vector<double> value(subsets);
  FeatureMatrix batch(x.schema_ptr(), n);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        batch(i, j) = (s >> j) & 1 ? x(0, j) : background(i, j);
      }
    }
    const Predictions out = PredictBatch(model, batch);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += out(i, output);
    value[s] = sum / static_cast<double>(n);
  }

  // |S|! (p - |S| - 1)! / p! = 1 / (p * C(p - 1, |S|))
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    weight[s] = 1.0 / (static_cast<double>(p) *
                       static_cast<double>(Binomial(p - 1, s)));
  }
  std::vector<double> phi(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
      phi[j] += weight[size] * (value[s | bit] - value[s]);
    }
  }
  return phi;
}

}  // namespace acme
