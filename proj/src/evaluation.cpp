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

#include "acme/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "acme/error.hpp"
#include "acme/random.hpp"

namespace acme {
namespace {

void CheckPermutation(std::span<const std::size_t> ranking, std::size_t n,
                      const char* what) {
  if (ranking.size() != n) {
    Fail(ErrorCode::kShape, std::string(what) + ": ranking has " +
                                std::to_string(ranking.size()) +
                                " entries, expected " + std::to_string(n));
  }
  std::vector<bool> seen(n, false);
  for (std::size_t item : ranking) {
    if (item >= n || seen[item]) {
      Fail(ErrorCode::kInvalidArgument,
           std::string(what) + ": ranking is not a permutation");
    }
    seen[item] = true;
  }
}

double TrainingMse(const Trainer& trainer, const Dataset& dataset,
                   std::span<const std::size_t> features,
                   std::span<const double> y) {
  const Dataset subset = dataset.SelectFeatures(features);
  const FeatureMatrix x = subset.Matrix();
  const auto model = trainer(x, y);
  const Predictions fitted = PredictBatch(*model, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - fitted(i, 0);
    sum += r * r;
  }
  return sum / static_cast<double>(y.size());
}

}  // namespace

double SyntheticSpec::variance(std::size_t j) const {
  const std::size_t k = p();
  return covariance.size() == k ? covariance[j] : covariance[j * k + j];
}

SyntheticSpec Experiment1Preset(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.beta = {10, 20, -10, 0.3, 1, 0, 0, -0.5};
  spec.mu.assign(8, 10.0);
  spec.covariance.assign(8, 10.0);
  spec.n = 200;
  spec.noise_variance = 10.0;
  spec.seed = seed;
  return spec;
}

SyntheticSpec Experiment2Preset(std::uint64_t seed) {
  SyntheticSpec spec = Experiment1Preset(seed);
  spec.mu = {100, 10, 10, 10, 100, 10, 10, 100};
  spec.covariance = {100, 10, 10, 10, 100, 10, 10, 100};
  return spec;
}

SyntheticSpec SyntheticPreset(std::string_view name, std::uint64_t seed) {
  if (name == "experiment1") return Experiment1Preset(seed);
  if (name == "experiment2") return Experiment2Preset(seed);
  Fail(ErrorCode::kInvalidArgument, "unknown synthetic preset '" +
                                        std::string(name) +
                                        "' (expected experiment1 or experiment2)");
}

Dataset GenerateLinearSynthetic(const SyntheticSpec& spec) {
  const std::size_t p = spec.p();
  if (p == 0 || spec.mu.size() != p) {
    Fail(ErrorCode::kShape, "synthetic spec: beta and mu must have equal, non-zero length");
  }
  if (spec.covariance.size() != p && spec.covariance.size() != p * p) {
    Fail(ErrorCode::kShape, "synthetic spec: covariance must have p or p*p entries");
  }
  if (spec.n == 0) Fail(ErrorCode::kDomain, "synthetic spec: n must be positive");
  if (!(spec.noise_variance >= 0.0)) {
    Fail(ErrorCode::kDomain, "synthetic spec: noise variance must be >= 0");
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (!(spec.variance(j) >= 0.0)) {
      Fail(ErrorCode::kDomain, "synthetic spec: covariance diagonal must be >= 0");
    }
  }

  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(p, p);
  if (spec.covariance.size() == p) {
    for (std::size_t j = 0; j < p; ++j) factor(j, j) = std::sqrt(spec.covariance[j]);
  } else {
    Eigen::MatrixXd sigma(p, p);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) sigma(a, b) = spec.covariance[a * p + b];
    }
    if (!sigma.isApprox(sigma.transpose())) {
      Fail(ErrorCode::kDomain, "synthetic spec: covariance is not symmetric");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      Fail(ErrorCode::kDomain, "synthetic spec: covariance is not positive definite");
    }
    factor = llt.matrixL();
  }

  Rng rng(spec.seed);
  const double noise_sd = std::sqrt(spec.noise_variance);
  std::vector<std::vector<double>> columns(p, std::vector<double>(spec.n));
  std::vector<double> y(spec.n);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z[j] = rng.Normal();
    double response = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      double x = spec.mu[a];
      for (std::size_t b = 0; b <= a; ++b) x += factor(a, b) * z[b];
      columns[a][i] = x;
      response += spec.beta[a] * x;
    }
    const double eps = rng.Normal();
    y[i] = response + noise_sd * eps;
  }
  std::vector<FeatureColumn> features;
  for (std::size_t j = 0; j < p; ++j) {
    features.push_back(FeatureColumn::Numeric("x" + std::to_string(j + 1),
                                              std::move(columns[j])));
  }
  return Dataset(std::move(features), FeatureColumn::Numeric("y", std::move(y)));
}

std::vector<double> TrueScores(const SyntheticSpec& spec) {
  std::vector<double> scores(spec.p());
  for (std::size_t j = 0; j < spec.p(); ++j) {
    scores[j] = std::abs(spec.beta[j]) * std::sqrt(spec.variance(j));
  }
  return scores;
}

double Ndcg(std::span<const double> relevance,
            std::span<const std::size_t> ranking) {
  CheckPermutation(ranking, relevance.size(), "ndcg");
  for (double r : relevance) {
    if (!(r >= 0.0)) Fail(ErrorCode::kDomain, "ndcg relevances must be >= 0");
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    dcg += relevance[ranking[i]] / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<double> ideal(relevance.begin(), relevance.end());
  std::stable_sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0 ? 1.0 : dcg / idcg;
}

double KendallTau(std::span<const std::size_t> a,
                  std::span<const std::size_t> b) {
  CheckPermutation(a, a.size(), "kendall_tau");
  CheckPermutation(b, a.size(), "kendall_tau");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::vector<std::size_t> pos_a(n), pos_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos_a[a[i]] = i;
    pos_b[b[i]] = i;
  }
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const bool order_a = pos_a[u] < pos_a[v];
      const bool order_b = pos_b[u] < pos_b[v];
      (order_a == order_b ? concordant : discordant) += 1;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

RankingReport EvaluateRanking(std::span<const double> true_scores,
                              std::span<const std::size_t> ranking,
                              std::optional<std::size_t> top_k) {
  RankingReport report;
  report.true_scores.assign(true_scores.begin(), true_scores.end());
  report.produced_ranking.assign(ranking.begin(), ranking.end());
  report.ndcg = Ndcg(true_scores, ranking);
  const std::vector<std::size_t> reference = RankByScore(true_scores);
  report.kendall_full = KendallTau(reference, ranking);
  if (top_k) {
    const std::size_t k = std::min(*top_k, reference.size());
    std::vector<std::size_t> local_id(reference.size(), SIZE_MAX);
    for (std::size_t i = 0; i < k; ++i) local_id[reference[i]] = i;
    std::vector<std::size_t> ref_k, produced_k;
    for (std::size_t i = 0; i < k; ++i) ref_k.push_back(i);
    for (std::size_t item : ranking) {
      if (local_id[item] != SIZE_MAX) produced_k.push_back(local_id[item]);
    }
    report.kendall_topk = KendallTau(ref_k, produced_k);
  }
  return report;
}

Trainer LinearTrainer() {
  return [](const FeatureMatrix& x, std::span<const double> y)
             -> std::shared_ptr<const Predictor> {
    return std::make_shared<LinearModel>(FitLinearRegression(x, y));
  };
}

TopKResult TopKFeatureEval(const Trainer& trainer, const Dataset& dataset,
                           std::span<const std::size_t> ranking,
                           std::size_t k) {
  const std::size_t p = dataset.n_features();
  CheckPermutation(ranking, p, "top-k evaluation");
  if (k < 1 || k >= p) {
    Fail(ErrorCode::kDomain, "top-k evaluation needs 1 <= k < p");
  }
  const std::vector<double> y = dataset.TargetValues();
  TopKResult result;
  result.top.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k));
  result.rest.assign(ranking.begin() + static_cast<std::ptrdiff_t>(k), ranking.end());
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  result.mse_full = TrainingMse(trainer, dataset, all, y);
  result.mse_topk = TrainingMse(trainer, dataset, result.top, y);
  result.mse_rest = TrainingMse(trainer, dataset, result.rest, y);
  return result;
}

std::string ExplainerConfig::Name() const {
  return kind == ExplainerKind::kAcme ? "acme" : "kernelshap";
}

std::string ExplainerConfig::Params() const {
  if (kind == ExplainerKind::kAcme) {
    return "Q=" + std::to_string(acme.grid.size()) +
           ";robust=" + (acme.grid.robust ? "true" : "false");
  }
  std::string out = "K=" + (shap.coalitions == 0 ? std::string("default")
                                                 : std::to_string(shap.coalitions));
  out += shap.exhaustive_background ? ";R=all" : ";R=" + std::to_string(shap.draws);
  out += ";rows=" + (shap.rows.empty() ? std::string("all")
                                       : std::to_string(shap.rows.size()));
  out += ";seed=" + std::to_string(shap.seed);
  return out;
}

std::vector<double> ExplainerScores(const ExplainerConfig& config,
                                    const Predictor& model,
                                    const Dataset& dataset) {
  if (config.kind == ExplainerKind::kKernelShap) {
    return KernelShapExplain(model, dataset, config.shap).importance;
  }
  if (model.task().is_classification()) {
    return ExplainClassification(model, dataset, ExplainScope::kGlobal, 0,
                                 config.acme)
        .stacked_importance;
  }
  const GlobalExplanation g = ExplainGlobal(model, dataset, config.acme);
  std::vector<double> scores;
  for (const auto& e : g.effects) scores.push_back(e.importance);
  return scores;
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<BenchmarkRecord> BenchmarkExplainers(
    std::span<const BenchmarkTask> tasks, std::size_t repetitions) {
  if (repetitions == 0) Fail(ErrorCode::kDomain, "repetitions must be >= 1");
  std::vector<BenchmarkRecord> records;
  for (const BenchmarkTask& task : tasks) {
    BenchmarkRecord record;
    record.explainer = task.explainer.Name();
    record.model = task.model_name;
    record.dataset = task.dataset_name;
    record.params = task.explainer.Params();
    try {
      if (!task.model || !task.dataset) {
        Fail(ErrorCode::kInvalidArgument, "benchmark task lacks a model or dataset");
      }
      record.n = task.dataset->n_rows();
      record.p = task.dataset->n_features();
      std::vector<double> scores;
      for (std::size_t r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        scores = ExplainerScores(task.explainer, *task.model, *task.dataset);
        const auto stop = std::chrono::steady_clock::now();
        record.seconds.push_back(std::chrono::duration<double>(stop - start).count());
      }
      record.median_seconds = Median(record.seconds);
      record.ranking = RankByScore(scores);
      if (!task.reference_scores.empty()) {
        const RankingReport report =
            EvaluateRanking(task.reference_scores, record.ranking);
        record.ndcg = report.ndcg;
        record.kendall_full = report.kendall_full;
      }
    } catch (const std::exception& e) {
      record.error = e.what();
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace acme
