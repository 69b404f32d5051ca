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

// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when a
// criterion fails, unless it is named with --known-red (those still print
// FAIL and are listed at the end).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acme/document.hpp"
#include "acme/engine.hpp"
#include "acme/evaluation.hpp"
#include "acme/kernel_shap.hpp"
#include "acme/model.hpp"
#include "acme/model_spec.hpp"
#include "acme/service.hpp"
#include "support/test_support.hpp"

namespace acme {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  std::string id;
  bool pass;
};

std::vector<Outcome> outcomes;

void Report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, pass});
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

std::string Names(std::span<const std::size_t> ranking, std::size_t k) {
  std::string s = "[";
  for (std::size_t i = 0; i < k && i < ranking.size(); ++i) {
    s += (i ? "," : "") + std::string("x") + std::to_string(ranking[i] + 1);
  }
  return s + "]";
}

std::shared_ptr<const Predictor> FitLinear(const Dataset& d) {
  return LinearTrainer()(d.Matrix(), d.TargetValues());
}

// --- synthetic ranking reproduction ------------------------------------

void ExperimentOne() {
  const std::vector<std::size_t> expected = {1, 2, 0, 4, 7};
  int exact = 0, tie_aware = 0;
  double worst_ndcg = 1.0;
  std::string misses;
  const auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticSpec spec = Experiment1Preset(seed);
    const Dataset d = GenerateLinearSynthetic(spec);
    const auto model = FitLinear(d);
    const GlobalExplanation g = ExplainGlobal(*model, d);
    const double ndcg = Ndcg(TrueScores(spec), g.ranking);
    worst_ndcg = std::min(worst_ndcg, ndcg);
    const bool head = std::equal(expected.begin(), expected.end(), g.ranking.begin());
    // x1 and x3 carry equal |beta|, so their relative order is a tie.
    std::vector<std::size_t> swapped = expected;
    std::swap(swapped[1], swapped[2]);
    const bool head_tie = head || std::equal(swapped.begin(), swapped.end(), g.ranking.begin());
    exact += head && ndcg >= 0.999;
    tie_aware += head_tie && ndcg >= 0.999;
    if (!head) misses += " seed" + std::to_string(seed) + "=" + Names(g.ranking, 5);
  }
  const double elapsed = Seconds(start);
  Report("exp1-ranking", exact >= 18 && elapsed < 5.0,
         std::to_string(exact) + "/20 seeds with top-5 [x2,x3,x1,x5,x8] and NDCG>=0.999 (need 18)" +
             Fmt("; min NDCG %.6f; %.3f s total (limit 5 s)", worst_ndcg, elapsed) +
             (misses.empty() ? "" : ";" + misses));
  std::printf("INFO exp1-ranking-tie-aware: %d/20 seeds with top-5 [x2,{x3,x1},x5,x8] and NDCG>=0.999\n",
              tie_aware);
}

void ExperimentTwo() {
  int ok = 0;
  double worst_ndcg = 1.0;
  const auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticSpec spec = Experiment2Preset(seed);
    const Dataset d = GenerateLinearSynthetic(spec);
    const auto model = FitLinear(d);
    const GlobalExplanation g = ExplainGlobal(*model, d);
    const double ndcg = Ndcg(TrueScores(spec), g.ranking);
    worst_ndcg = std::min(worst_ndcg, ndcg);
    ok += g.ranking[0] == 0 && ndcg >= 0.999;
  }
  const double elapsed = Seconds(start);
  Report("exp2-ranking", ok >= 18 && elapsed < 5.0,
         std::to_string(ok) + "/20 seeds with top feature x1 and NDCG>=0.999 (need 18)" +
             Fmt("; min NDCG %.6f; %.3f s total", worst_ndcg, elapsed));
}

// --- speedup -------------------------------------------------------------

void Speedup() {
  const Dataset d = GenerateLinearSynthetic(Experiment1Preset(0));
  const auto model = FitLinear(d);
  std::vector<double> acme_t, shap_t;
  for (int r = 0; r < 3; ++r) {
    auto t = Clock::now();
    ExplainGlobal(*model, d);
    acme_t.push_back(Seconds(t));
    t = Clock::now();
    KernelShapExplain(*model, d);
    shap_t.push_back(Seconds(t));
  }
  const double a = Median(acme_t), s = Median(shap_t);
  Report("speedup", s / a >= 50.0,
         Fmt("AcME median %.5f s, KernelSHAP (K=2064, all 200 rows) median %.3f s, ratio %.0fx (need 50x)",
             a, s, s / a));
}

// --- Shapley oracle ------------------------------------------------------

void ShapleyOracle() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0, worst_axiom = 0.0, worst_eff = 0.0, worst_dummy = 0.0, worst_sym = 0.0;
  int cases = 0;
  for (std::size_t p = 2; p <= 4; ++p) {
    for (int trial = 0; trial < 5; ++trial) {
      const Dataset d = testing::RandomDataset(rng, 16, p);
      std::vector<double> coef, y;
      for (std::size_t j = 0; j < p; ++j) coef.push_back(j == p - 1 ? 0.0 : rng.Normal());
      for (std::size_t i = 0; i < d.n_rows(); ++i) y.push_back(rng.Normal());
      const LinearModel linear(d.schema(), coef, rng.Normal());
      const KnnModel knn = FitKnn(d.Matrix(), y, 1 + rng.Index(4), Task::Regression());
      for (const Predictor* m : {static_cast<const Predictor*>(&linear),
                                 static_cast<const Predictor*>(&knn)}) {
        KernelShapOptions o;
        o.coalitions = std::size_t{1} << p;
        o.exhaustive_background = true;
        const GlobalShap g = KernelShapExplain(*m, d, o);
        const Predictions all = PredictBatch(*m, d.Matrix());
        double v_empty = 0.0;
        for (std::size_t i = 0; i < d.n_rows(); ++i) v_empty += all(i, 0);
        v_empty /= static_cast<double>(d.n_rows());
        for (const auto& a : g.per_row) {
          const auto exact = ExactShapley(*m, d.Row(a.row_index), d.Matrix());
          double sum = 0.0;
          for (std::size_t j = 0; j < p; ++j) {
            worst = std::max(worst, std::abs(a.phi[j] - exact[j]));
            sum += exact[j];
          }
          // Efficiency for both models, dummy for the zero coefficient.
          worst_eff = std::max(worst_eff, std::abs(sum - (all(a.row_index, 0) - v_empty)));
          if (m == &linear) worst_dummy = std::max(worst_dummy, std::abs(exact[p - 1]));
        }
        ++cases;
      }
      // Symmetry: exchangeable features under a symmetric function and a
      // background closed under swapping them, probed where they agree.
      std::vector<double> a, b;
      for (int i = 0; i < 10; ++i) a.push_back(rng.Normal()), b.push_back(rng.Normal());
      std::vector<double> c0 = a, c1 = b;
      c0.insert(c0.end(), b.begin(), b.end());
      c1.insert(c1.end(), a.begin(), a.end());
      std::vector<std::vector<double>> cols = {c0, c1};
      for (std::size_t j = 2; j < p; ++j) {
        std::vector<double> c;
        for (int i = 0; i < 10; ++i) c.push_back(rng.Normal());
        const std::vector<double> half = c;
        c.insert(c.end(), half.begin(), half.end());
        cols.push_back(c);
      }
      const Dataset sd = testing::NumericDataset(cols);
      const testing::FnModel sym(sd.schema(), [](std::span<const double> x) {
        double s = x[0] * x[1] + std::exp(0.3 * x[0]) + std::exp(0.3 * x[1]);
        for (std::size_t j = 2; j < x.size(); ++j) s += std::sin(x[j]) * (x[0] + x[1]);
        return s;
      });
      FeatureMatrix x = sd.Row(3);
      x(0, 1) = x(0, 0);
      const auto phi = ExactShapley(sym, x, sd.Matrix());
      worst_sym = std::max(worst_sym, std::abs(phi[0] - phi[1]));
    }
  }
  const double elapsed = Seconds(start);
  worst_axiom = std::max({worst_eff, worst_dummy, worst_sym});
  Report("shapley-oracle", worst <= 1e-6 && worst_axiom <= 1e-10 && elapsed < 30.0,
         std::to_string(cases) + Fmt(" models, p in {2,3,4}: max |kernel - exact| %.2e (tol 1e-6), "
                                     "efficiency %.2e, dummy %.2e, symmetry %.2e (tol 1e-10)",
                                     worst, worst_eff, worst_dummy, worst_sym) +
             Fmt(", %.2f s", elapsed));
}

// --- invariant suite -----------------------------------------------------

int RunCommand(const std::string& cmd, std::string* output) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "acme_acceptance_cmd.txt").string();
  const int status = std::system((cmd + " >'" + path + "' 2>&1").c_str());
  if (output != nullptr) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    *output = s.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void InvariantSuite() {
  const std::string filter =
      "EnginePropertyTest.AffineOutputScalesEffects:"
      "EnginePropertyTest.IgnoredFeaturesScoreExactlyZero:"
      "EnginePropertyTest.PermutingFeaturesPermutesImportance:"
      "EnginePropertyTest.BinaryClassEffectsAreNegations:"
      "EnginePropertyTest.PredictionCostIsOnePlusProbeCount";
  std::string out;
  const int code = RunCommand(std::string("'") + ACME_PROPERTY_TESTS +
                                  "' --gtest_filter=" + filter, &out);
  const bool five = out.find("[  PASSED  ] 5 tests.") != std::string::npos;
  Report("invariant-suite", code == 0 && five,
         std::string("affine, dummy, permutation, binary antisymmetry, cost bound; 100 cases each: ") +
             (five ? "5/5 properties held" : "property run failed, exit " + std::to_string(code)));
}

// --- top-k protocol ------------------------------------------------------

void TopK() {
  const Dataset d = GenerateLinearSynthetic(Experiment1Preset(0));
  const auto model = FitLinear(d);
  const auto ranking = ExplainGlobal(*model, d).ranking;
  const TopKResult r = TopKFeatureEval(LinearTrainer(), d, ranking, 5);
  const bool pass = r.mse_topk < r.mse_rest &&
                    std::abs(r.mse_topk - r.mse_full) < std::abs(r.mse_rest - r.mse_full);
  Report("topk-protocol", pass,
         "top-5 " + Names(r.top, 5) +
             Fmt(": mse_full %.3f, mse_topk %.3f, mse_rest %.3f", r.mse_full, r.mse_topk, r.mse_rest));
}

// --- KernelSHAP degradation ----------------------------------------------

void Degradation() {
  // A linear model makes every coalition set exact up to background noise,
  // so the study uses a k-NN regressor fitted to the same data.
  const Dataset d = GenerateLinearSynthetic(Experiment1Preset(0));
  const auto model = BuildModel(d, ParseModelSpec("knn:5"));
  const std::vector<std::size_t> budgets = {10, 25, 50, 100};
  std::vector<std::vector<double>> taus(budgets.size());
  const auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    KernelShapOptions o;
    o.seed = seed;
    o.threads = 0;
    const auto reference = KernelShapExplain(*model, d, o).ranking;
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      o.coalitions = budgets[b];
      taus[b].push_back(KendallTau(reference, KernelShapExplain(*model, d, o).ranking));
    }
  }
  std::vector<double> medians;
  std::string detail = "median tau vs default K over 10 seeds:";
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    medians.push_back(Median(taus[b]));
    detail += Fmt(" K=%.0f:%.3f", static_cast<double>(budgets[b]), medians.back());
  }
  bool monotone = true;
  for (std::size_t b = 1; b < medians.size(); ++b) monotone = monotone && medians[b] >= medians[b - 1];
  detail += Fmt("; %.1f s", Seconds(start));
  Report("kernelshap-degradation", medians[0] < 1.0 && monotone, detail);
}

// --- determinism ---------------------------------------------------------

void Determinism() {
  bool ok = true;
  std::string failed;
  auto check = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failed += " " + what;
    }
  };
  const Dataset d = GenerateLinearSynthetic(Experiment1Preset(3));
  check(d.Fingerprint() == GenerateLinearSynthetic(Experiment1Preset(3)).Fingerprint(), "synth");
  const auto model = FitLinear(d);
  const std::string g1 = Serialize(ToDocument(ExplainGlobal(*model, d)));
  ExplainOptions threaded;
  threaded.threads = 4;
  check(g1 == Serialize(ToDocument(ExplainGlobal(*model, d, threaded))), "global");
  KernelShapOptions so;
  so.coalitions = 30;
  so.seed = 9;
  const std::string s1 = Serialize(ToDocument(KernelShapExplain(*model, d, so), *d.schema(), "x"));
  so.threads = 4;
  check(s1 == Serialize(ToDocument(KernelShapExplain(*model, d, so), *d.schema(), "x")), "kernelshap");

  // CLI and service.
  const std::string cli = std::string("'") + ACME_CLI + "'";
  std::string a, b, c;
  RunCommand(cli + " explain-global --preset experiment1 --seed 3", &a);
  RunCommand(cli + " explain-global --preset experiment1 --seed 3 --threads 3", &b);
  check(!a.empty() && a == b, "cli-global");
  check(a == g1, "cli-vs-library");
  RunCommand(cli + " shap --preset experiment1 --seed 3 --rows 1,2 --coalitions 30", &a);
  RunCommand(cli + " shap --preset experiment1 --seed 3 --rows 1,2 --coalitions 30", &b);
  check(!a.empty() && a == b, "cli-shap");
  ExplainService service;
  SessionSource src;
  src.dataset = std::make_shared<const Dataset>(d);
  src.model = model;
  src.model_name = "linear";
  const std::string id = service.AddSession(src);
  check(service.Handle("GET", "/sessions/" + id + "/explain/global", "").body == g1, "service");
  RunCommand(cli + " explain-local --preset experiment1 --seed 3 --row 11", &c);
  check(service.Handle("GET", "/sessions/" + id + "/explain/local/11", "").body == c, "service-local");

  // Benchmarks with masked timing.
  auto data = std::make_shared<const Dataset>(d);
  std::vector<BenchmarkTask> tasks(2);
  for (auto& t : tasks) {
    t.model = model;
    t.dataset = data;
    t.reference_scores = TrueScores(Experiment1Preset(3));
  }
  tasks[1].explainer.kind = ExplainerKind::kKernelShap;
  tasks[1].explainer.shap = so;
  const std::string j1 = BenchmarkJsonLines(BenchmarkExplainers(tasks, 2), true);
  const std::string j2 = BenchmarkJsonLines(BenchmarkExplainers(tasks, 2), true);
  check(j1 == j2, "benchmark");
  Report("determinism", ok,
         ok ? "library, threads, CLI, service and masked benchmark output byte-identical"
            : "mismatch in" + failed);
}

}  // namespace
}  // namespace acme

int main(int argc, char** argv) {
  std::set<std::string> known_red;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--known-red") known_red.insert(argv[++i]);
  }
  acme::ExperimentOne();
  acme::ExperimentTwo();
  acme::Speedup();
  acme::ShapleyOracle();
  acme::InvariantSuite();
  acme::TopK();
  acme::Degradation();
  acme::Determinism();
  int unexpected = 0, passed = 0;
  for (const auto& o : acme::outcomes) {
    passed += o.pass;
    if (!o.pass && known_red.count(o.id) == 0) ++unexpected;
    if (!o.pass && known_red.count(o.id) != 0) {
      std::printf("NOTE %s failed and is listed as a known red criterion\n", o.id.c_str());
    }
  }
  std::printf("%d/%zu criteria passed\n", passed, acme::outcomes.size());
  return unexpected == 0 ? 0 : 1;
}
