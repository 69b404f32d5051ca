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

#ifndef ACME_EVALUATION_HPP_
#define ACME_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acme/engine.hpp"
#include "acme/kernel_shap.hpp"
#include "acme/model.hpp"
#include "acme/tabular.hpp"

namespace acme {

// Linear ground truth y = X beta + eps, X ~ N(mu, Sigma), eps ~ N(0, noise).
struct SyntheticSpec {
  std::vector<double> beta;
  std::vector<double> mu;
  // Either p entries (diagonal) or p*p entries (full, row-major).
  std::vector<double> covariance;
  std::size_t n = 200;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;

  std::size_t p() const { return beta.size(); }
  double variance(std::size_t j) const;
};

SyntheticSpec Experiment1Preset(std::uint64_t seed = 0);
SyntheticSpec Experiment2Preset(std::uint64_t seed = 0);
// "experiment1" or "experiment2".
SyntheticSpec SyntheticPreset(std::string_view name, std::uint64_t seed = 0);

// Features x1..xp and numeric target y. Bit-reproducible for a fixed seed.
Dataset GenerateLinearSynthetic(const SyntheticSpec& spec);

// Relevance of each feature under the generator: |beta_j| * sd(x_j). With
// equal feature scales this orders features exactly like |beta|.
std::vector<double> TrueScores(const SyntheticSpec& spec);

// Linear-gain NDCG: sum rel(ranking[i]) / log2(i + 1) over 1-based
// positions, divided by the ideal DCG (1 when the ideal DCG is 0).
double Ndcg(std::span<const double> relevance,
            std::span<const std::size_t> ranking);

// Kendall tau-a between two orderings of the same items.
double KendallTau(std::span<const std::size_t> a,
                  std::span<const std::size_t> b);

struct RankingReport {
  std::vector<double> true_scores;
  std::vector<std::size_t> produced_ranking;
  double ndcg = 0.0;
  double kendall_full = 0.0;
  std::optional<double> kendall_topk;
};

// Compares a produced ranking with the ranking induced by true_scores.
// kendall_topk restricts both orderings to the reference's top k items.
RankingReport EvaluateRanking(std::span<const double> true_scores,
                              std::span<const std::size_t> ranking,
                              std::optional<std::size_t> top_k = std::nullopt);

using Trainer = std::function<std::shared_ptr<const Predictor>(
    const FeatureMatrix&, std::span<const double>)>;

Trainer LinearTrainer();

struct TopKResult {
  double mse_full = 0.0;
  double mse_topk = 0.0;
  double mse_rest = 0.0;
  std::vector<std::size_t> top;
  std::vector<std::size_t> rest;
};

// Refits on all features, the first k of ranking, and the remaining
// features, and reports the training-set MSE of each.
TopKResult TopKFeatureEval(const Trainer& trainer, const Dataset& dataset,
                           std::span<const std::size_t> ranking, std::size_t k);

enum class ExplainerKind { kAcme, kKernelShap };

struct ExplainerConfig {
  ExplainerKind kind = ExplainerKind::kAcme;
  ExplainOptions acme;
  KernelShapOptions shap;

  std::string Name() const;
  // Compact "key=value;..." description of the parameters.
  std::string Params() const;
};

struct BenchmarkTask {
  ExplainerConfig explainer;
  std::shared_ptr<const Predictor> model;
  std::string model_name;
  std::shared_ptr<const Dataset> dataset;
  std::string dataset_name;
  std::vector<double> reference_scores;  // empty = no quality columns
};

struct BenchmarkRecord {
  std::string explainer;
  std::string model;
  std::string dataset;
  std::size_t n = 0;
  std::size_t p = 0;
  std::string params;
  std::vector<double> seconds;  // one per repetition
  double median_seconds = 0.0;
  std::vector<std::size_t> ranking;
  std::optional<double> ndcg;
  std::optional<double> kendall_full;
  std::optional<std::string> error;
};

// Global feature scores of one explainer run (stacked importance for
// classifiers under AcME).
std::vector<double> ExplainerScores(const ExplainerConfig& config,
                                    const Predictor& model,
                                    const Dataset& dataset);

double Median(std::vector<double> values);

// Runs every task `repetitions` times sequentially. A failing task yields a
// record with `error` set; later tasks still run.
std::vector<BenchmarkRecord> BenchmarkExplainers(
    std::span<const BenchmarkTask> tasks, std::size_t repetitions);

}  // namespace acme

#endif  // ACME_EVALUATION_HPP_
