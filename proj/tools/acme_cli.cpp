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

// acme: command-line front end over the C interface.
//
//   acme explain-global --data d.csv --target y --model linear --out g.json
//   acme explain-local  --data d.csv --target y --row 3 --svg local.svg
//   acme what-if        --data d.csv --target y --row 3 --set x1=2.5
//   acme shap           --preset experiment1 --rows 0,1,2 --seed 1
//   acme benchmark      --config bench.json --mask-timing
//   acme synth          --preset experiment1 --seed 7 --out e1.csv
//   acme serve          --data d.csv --target y --port 8080
//
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <charconv>
#include <csignal>
#include <pthread.h>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acme/acme.h"

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void Check(acme_status status, const std::string& what) {
  if (status != ACME_OK) {
    throw RuntimeError(what + ": " + acme_last_error_message() + " [" +
                       acme_status_name(status) + "]");
  }
}

// Owning wrappers for the C handles.
struct DatasetFree {
  void operator()(acme_dataset* d) const { acme_dataset_free(d); }
};
struct ModelFree {
  void operator()(acme_model* m) const { acme_model_free(m); }
};
struct ServiceFree {
  void operator()(acme_service* s) const { acme_service_free(s); }
};
using DatasetPtr = std::unique_ptr<acme_dataset, DatasetFree>;
using ModelPtr = std::unique_ptr<acme_model, ModelFree>;
using ServicePtr = std::unique_ptr<acme_service, ServiceFree>;

std::string TakeString(char* text) {
  std::string s(text);
  acme_string_free(text);
  return s;
}

void WriteOutput(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  file << text;
  file.flush();
  if (!file) throw RuntimeError("cannot write " + path);
}

struct DataFlags {
  std::string data;
  std::string target;
  std::string preset;
  std::uint64_t seed = 0;
  std::string model = "linear";
};

struct GridFlags {
  std::size_t quantiles = 50;
  bool robust = false;
  std::size_t threads = 1;
};

struct Config {
  DataFlags data;
  GridFlags grid;
  std::int64_t row = -1;
  std::string out;
  std::string svg;
  std::string bars;
  std::size_t class_index = 0;
  std::vector<std::string> sets;
  // shap
  std::vector<std::int64_t> rows;
  std::size_t coalitions = 0;
  std::size_t draws = 10;
  bool exhaustive = false;
  std::size_t output = 0;
  // benchmark
  std::string config_path;
  bool mask_timing = false;
  std::optional<std::size_t> reps;
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string name;
};

void AddDataFlags(CLI::App* cmd, DataFlags& f, bool with_model = true) {
  cmd->add_option("--data", f.data, "CSV file");
  cmd->add_option("--target", f.target, "target column");
  cmd->add_option("--preset", f.preset, "synthetic preset (experiment1, experiment2)");
  cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
  if (with_model) {
    cmd->add_option("--model", f.model,
                    "linear | knn[:k] | knn-classifier[:k] | external:<task>:<cmd>")
        ->capture_default_str();
  }
}

void AddGridFlags(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--Q", g.quantiles, "quantile grid size")->capture_default_str();
  cmd->add_flag("--robust", g.robust, "grid over [0.1, 0.9]");
  cmd->add_option("--threads", g.threads, "worker threads, 0 = all cores")
      ->capture_default_str();
}

DatasetPtr LoadData(const DataFlags& f) {
  if (f.data.empty() == f.preset.empty()) {
    throw UsageError("exactly one of --data and --preset is required");
  }
  acme_dataset* d = nullptr;
  if (!f.preset.empty()) {
    Check(acme_dataset_from_preset(f.preset.c_str(), f.seed, &d), "preset");
  } else {
    if (f.target.empty()) throw UsageError("--target is required with --data");
    Check(acme_dataset_load_csv(f.data.c_str(), f.target.c_str(), &d), "load " + f.data);
  }
  return DatasetPtr(d);
}

ModelPtr MakeModel(const acme_dataset* d, const std::string& spec) {
  acme_model* m = nullptr;
  Check(acme_model_create(d, spec.c_str(), &m), "model '" + spec + "'");
  return ModelPtr(m);
}

acme_explain_options Options(const GridFlags& g) {
  acme_explain_options o;
  acme_explain_options_init(&o);
  o.quantiles = g.quantiles;
  o.robust = g.robust ? 1 : 0;
  o.threads = g.threads;
  return o;
}

std::size_t RequireRow(std::int64_t row) {
  if (row < 0) throw UsageError("--row must be a non-negative index");
  return static_cast<std::size_t>(row);
}

void WritePlots(const Config& c, const std::string& doc) {
  const std::pair<const std::string*, acme_plot_kind> plots[] = {
      {&c.svg, ACME_PLOT_EFFECTS}, {&c.bars, ACME_PLOT_BARS}};
  for (const auto& [path, kind] : plots) {
    if (path->empty()) continue;
    char* svg = nullptr;
    Check(acme_render_svg(doc.c_str(), kind, c.class_index, &svg), "render " + *path);
    WriteOutput(*path, TakeString(svg));
  }
}

int RunExplain(const Config& c, bool local) {
  const auto options = Options(c.grid);
  std::size_t row = 0;
  if (local) row = RequireRow(c.row);
  auto data = LoadData(c.data);
  auto model = MakeModel(data.get(), c.data.model);
  char* json = nullptr;
  if (local) {
    Check(acme_explain_local(model.get(), data.get(), row, &options, &json), "explain");
  } else {
    Check(acme_explain_global(model.get(), data.get(), &options, &json), "explain");
  }
  const std::string doc = TakeString(json);
  WriteOutput(c.out, doc);
  WritePlots(c, doc);
  return 0;
}

// Values that parse as numbers go to numeric features, everything else is
// a categorical level.
int RunWhatIf(const Config& c) {
  const std::size_t row = RequireRow(c.row);
  auto data = LoadData(c.data);
  auto model = MakeModel(data.get(), c.data.model);
  nlohmann::ordered_json edits = nlohmann::ordered_json::object();
  std::size_t p = 0;
  Check(acme_dataset_shape(data.get(), nullptr, &p), "shape");
  for (const std::string& set : c.sets) {
    const auto eq = set.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects name=value, got '" + set + "'");
    }
    const std::string name = set.substr(0, eq);
    const std::string value = set.substr(eq + 1);
    int categorical = -1;
    for (std::size_t j = 0; j < p; ++j) {
      const char* fname = nullptr;
      int cat = 0;
      Check(acme_dataset_feature(data.get(), j, &fname, &cat), "feature");
      if (name == fname) categorical = cat;
    }
    if (categorical < 0) throw UsageError("unknown feature '" + name + "'");
    if (categorical == 1) {
      edits[name] = value;
      continue;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw UsageError("feature '" + name + "' is numeric, got '" + value + "'");
    }
    edits[name] = v;
  }
  char* json = nullptr;
  Check(acme_what_if(model.get(), data.get(), row, edits.dump().c_str(), &json), "what-if");
  WriteOutput(c.out, TakeString(json));
  return 0;
}

int RunShap(const Config& c) {
  std::vector<std::size_t> rows;
  for (std::int64_t r : c.rows) rows.push_back(RequireRow(r));
  auto data = LoadData(c.data);
  auto model = MakeModel(data.get(), c.data.model);
  acme_shap_options o;
  acme_shap_options_init(&o);
  o.rows = rows.empty() ? nullptr : rows.data();
  o.n_rows = rows.size();
  o.coalitions = c.coalitions;
  o.draws = c.draws;
  o.exhaustive_background = c.exhaustive ? 1 : 0;
  o.seed = c.data.seed;
  o.output = c.output;
  o.threads = c.grid.threads;
  char* json = nullptr;
  Check(acme_kernel_shap(model.get(), data.get(), &o, &json), "shap");
  WriteOutput(c.out, TakeString(json));
  return 0;
}

int RunBenchmark(const Config& c) {
  std::ifstream file(c.config_path, std::ios::binary);
  if (!file) throw RuntimeError("cannot read " + c.config_path);
  nlohmann::ordered_json config;
  try {
    config = nlohmann::ordered_json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError("malformed benchmark config: " + std::string(e.what()));
  }
  if (c.mask_timing) config["mask_timing"] = true;
  if (c.reps) config["repetitions"] = *c.reps;
  char* lines = nullptr;
  Check(acme_benchmark(config.dump().c_str(), &lines), "benchmark");
  WriteOutput(c.out, TakeString(lines));
  return 0;
}

int RunSynth(const Config& c) {
  if (c.data.preset.empty()) throw UsageError("--preset is required");
  if (c.out.empty()) throw UsageError("--out is required");
  acme_dataset* d = nullptr;
  Check(acme_dataset_from_preset(c.data.preset.c_str(), c.data.seed, &d), "preset");
  DatasetPtr data(d);
  Check(acme_dataset_write_csv(data.get(), c.out.c_str()), "write");
  return 0;
}

int RunServe(const Config& c) {
  if (c.port < 0 || c.port > 65535) throw UsageError("--port out of range");
  const auto options = Options(c.grid);
  auto data = LoadData(c.data);
  auto model = MakeModel(data.get(), c.data.model);
  acme_service* s = nullptr;
  Check(acme_service_create(&s), "service");
  ServicePtr service(s);
  const std::string name =
      !c.name.empty() ? c.name : (!c.data.data.empty() ? c.data.data : c.data.preset);
  char* id = nullptr;
  Check(acme_service_add_session(service.get(), name.c_str(), data.get(), model.get(),
                                 &options, &id),
        "session");
  const std::string session = TakeString(id);
  // Block the stop signals before the server thread starts so that only
  // sigwait below sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  int port = 0;
  Check(acme_service_start(service.get(), c.host.c_str(), c.port, &port), "listen");
  std::cerr << "serving session " << session << " on http://" << c.host << ":" << port
            << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  acme_service_stop(service.get());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AcME explanations, KernelSHAP baseline and benchmarks"};
  app.require_subcommand(1);
  Config c;

  auto* global = app.add_subcommand("explain-global", "global AcME explanation");
  AddDataFlags(global, c.data);
  AddGridFlags(global, c.grid);
  global->add_option("--out", c.out, "explanation document (default stdout)");
  global->add_option("--svg", c.svg, "quantile effect plot");
  global->add_option("--bars", c.bars, "importance bar plot");
  global->add_option("--class-index", c.class_index, "class shown in the effect plot");

  auto* local = app.add_subcommand("explain-local", "local AcME explanation of one row");
  AddDataFlags(local, c.data);
  AddGridFlags(local, c.grid);
  local->add_option("--row", c.row, "row to explain")->required();
  local->add_option("--out", c.out, "explanation document (default stdout)");
  local->add_option("--svg", c.svg, "quantile effect plot");
  local->add_option("--bars", c.bars, "importance bar plot");
  local->add_option("--class-index", c.class_index, "class shown in the effect plot");

  auto* whatif = app.add_subcommand("what-if", "prediction change for edited features");
  AddDataFlags(whatif, c.data);
  whatif->add_option("--row", c.row, "row to edit")->required();
  whatif->add_option("--set", c.sets, "feature edit name=value (repeatable)");
  whatif->add_option("--out", c.out, "delta document (default stdout)");

  auto* shap = app.add_subcommand("shap", "KernelSHAP attributions");
  AddDataFlags(shap, c.data);
  shap->add_option("--rows", c.rows, "rows to explain (default all)")->delimiter(',');
  shap->add_option("--coalitions", c.coalitions, "coalition budget, 0 = 2048 + 2p");
  shap->add_option("--draws", c.draws, "background draws per coalition")
      ->capture_default_str();
  shap->add_flag("--exhaustive-background", c.exhaustive,
                 "average each coalition over the whole background");
  shap->add_option("--output", c.output, "class index for classifiers");
  shap->add_option("--threads", c.grid.threads, "worker threads, 0 = all cores");
  shap->add_option("--out", c.out, "attribution document (default stdout)");

  auto* bench = app.add_subcommand("benchmark", "time explainers over datasets and models");
  bench->add_option("--config", c.config_path, "benchmark description (JSON)")->required();
  bench->add_flag("--mask-timing", c.mask_timing, "null timing fields for reproducible output");
  bench->add_option("--reps", c.reps, "repetitions per cell");
  bench->add_option("--out", c.out, "JSON lines (default stdout)");

  auto* synth = app.add_subcommand("synth", "write a synthetic preset as CSV");
  AddDataFlags(synth, c.data, false);
  synth->add_option("--out", c.out, "CSV path");

  auto* serve = app.add_subcommand("serve", "HTTP explanation and what-if service");
  AddDataFlags(serve, c.data);
  AddGridFlags(serve, c.grid);
  serve->add_option("--host", c.host, "bind address")->capture_default_str();
  serve->add_option("--port", c.port, "port, 0 = any free port")->capture_default_str();
  serve->add_option("--name", c.name, "session name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*global) return RunExplain(c, false);
    if (*local) return RunExplain(c, true);
    if (*whatif) return RunWhatIf(c);
    if (*shap) return RunShap(c);
    if (*bench) return RunBenchmark(c);
    if (*synth) return RunSynth(c);
    if (*serve) return RunServe(c);
  } catch (const UsageError& e) {
    std::cerr << "acme: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "acme: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
