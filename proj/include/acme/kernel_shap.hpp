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

#ifndef ACME_KERNEL_SHAP_HPP_
#define ACME_KERNEL_SHAP_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "acme/model.hpp"
#include "acme/random.hpp"
#include "acme/tabular.hpp"

namespace acme {

struct Coalition {
  std::vector<std::uint8_t> mask;  // 1 = feature present
  std::size_t size = 0;
  double weight = 0.0;             // +inf for the empty and full coalitions
};

// SHAP kernel (p - 1) / (C(p, s) * s * (p - s)); +inf at s = 0 and s = p,
// which the fitter turns into equality constraints.
double ShapKernelWeight(std::size_t p, std::size_t size);

inline std::size_t DefaultCoalitionBudget(std::size_t p) { return 2048 + 2 * p; }

// The empty and full coalitions, then whole size layers in order of
// decreasing kernel weight (1, p-1, 2, p-2, ...) while they fit in the
// budget. The first layer that does not fit is sampled uniformly without
// replacement to exhaust the budget. Deterministic in seed.
std::vector<Coalition> SampleCoalitions(std::size_t p, std::size_t budget,
                                        std::uint64_t seed);

// Keeps x where the mask is set and takes every other feature from
// background_row.
std::vector<double> MapCoalition(std::span<const double> x,
                                 std::span<const std::uint8_t> mask,
                                 std::span<const double> background_row);

// Same, drawing the background row uniformly with rng.
std::vector<double> MapCoalition(std::span<const double> x,
                                 std::span<const std::uint8_t> mask,
                                 const FeatureMatrix& background, Rng& rng);

struct ShapleyAttribution {
  std::vector<double> phi;
  double phi0 = 0.0;
  std::size_t row_index = 0;
};

struct GlobalShap {
  std::vector<ShapleyAttribution> per_row;
  std::vector<double> importance;  // sum over rows of |phi_j|
  std::vector<std::size_t> ranking;
};

struct KernelShapOptions {
  std::vector<std::size_t> rows;  // empty = every dataset row
  std::size_t coalitions = 0;     // 0 = DefaultCoalitionBudget(p)
  std::size_t draws = 10;         // background rows averaged per coalition
  // Average every coalition over the whole background instead of `draws`
  // random rows.
  bool exhaustive_background = false;
  std::uint64_t seed = 0;
  std::size_t output = 0;         // class index for classification models
  std::size_t threads = 1;        // 0 = hardware count; results unaffected
};

// KernelSHAP with the dataset as background. For each explained row the
// weighted least-squares fit of the coalition values is constrained so that
// phi0 is the mean background prediction and phi0 + sum(phi) = f(x).
GlobalShap KernelShapExplain(const Predictor& model, const Dataset& dataset,
                             const KernelShapOptions& options = {});

inline constexpr std::size_t kExactShapleyFeatureLimit = 12;

// Brute-force Shapley values over all 2^p coalitions with the value of a
// coalition averaged over every background row.
std::vector<double> ExactShapley(const Predictor& model, const FeatureMatrix& x,
                                 const FeatureMatrix& background,
                                 std::size_t output = 0,
                                 std::size_t feature_limit = kExactShapleyFeatureLimit);

}  // namespace acme

#endif  // ACME_KERNEL_SHAP_HPP_
