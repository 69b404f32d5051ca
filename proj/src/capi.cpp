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

#include "acme/acme.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acme/document.hpp"
#include "acme/engine.hpp"
#include "acme/error.hpp"
#include "acme/evaluation.hpp"
#include "acme/kernel_shap.hpp"
#include "acme/model_spec.hpp"
#include "acme/service.hpp"
#include "acme/svg.hpp"

struct acme_dataset {
  std::shared_ptr<const acme::Dataset> data;
  std::optional<acme::SyntheticSpec> synthetic;
};

struct acme_model {
  std::shared_ptr<const acme::Predictor> predictor;
  std::string spec;
};

struct acme_service {
  acme::ExplainService service;
};

namespace {

using acme::ErrorCode;
using acme::Fail;

thread_local std::string last_error;

acme_status Record(acme_status status, const char* message) {
  last_error = message;
  return status;
}

// Runs fn, mapping exceptions to status codes and the thread's message.
template <typename Fn>
acme_status Guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return ACME_OK;
  } catch (const acme::Error& e) {
    return Record(static_cast<acme_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Record(ACME_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return Record(ACME_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Record(ACME_ERR_INTERNAL, e.what());
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) Fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

acme::ExplainOptions ToOptions(const acme_explain_options* o) {
  acme::ExplainOptions options;
  if (o != nullptr) {
    options.grid = acme::MakeQuantileGrid(o->quantiles, o->robust != 0);
    options.threads = o->threads;
  }
  return options;
}

acme::KernelShapOptions ToShapOptions(const acme_shap_options* o) {
  acme::KernelShapOptions options;
  if (o != nullptr) {
    if (o->rows != nullptr) options.rows.assign(o->rows, o->rows + o->n_rows);
    options.coalitions = o->coalitions;
    options.draws = o->draws;
    options.exhaustive_background = o->exhaustive_background != 0;
    options.seed = o->seed;
    options.output = o->output;
    options.threads = o->threads;
  }
  return options;
}

void CheckPair(const acme_model* model, const acme_dataset* dataset) {
  Require(model, "model");
  Require(dataset, "dataset");
  if (model->predictor->schema().size() != dataset->data->n_features()) {
    Fail(ErrorCode::kShape, "model expects " +
                                std::to_string(model->predictor->schema().size()) +
                                " features, dataset has " +
                                std::to_string(dataset->data->n_features()));
  }
}

std::shared_ptr<const acme::Dataset> LoadDatasetEntry(
    const acme::Document& entry, std::vector<double>& reference) {
  if (entry.contains("preset")) {
    const auto spec = acme::SyntheticPreset(entry["preset"].get<std::string>(),
                                            entry.value("seed", std::uint64_t{0}));
    reference = acme::TrueScores(spec);
    return std::make_shared<const acme::Dataset>(acme::GenerateLinearSynthetic(spec));
  }
  if (entry.contains("csv")) {
    acme::CsvOptions csv;
    if (entry.contains("target")) csv.target = entry["target"].get<std::string>();
    return std::make_shared<const acme::Dataset>(
        acme::LoadCsvFile(entry["csv"].get<std::string>(), csv));
  }
  Fail(ErrorCode::kInvalidArgument, "benchmark dataset needs \"preset\" or \"csv\"");
}

acme::ExplainerConfig ExplainerEntry(const acme::Document& entry) {
  acme::ExplainerConfig config;
  const std::string kind = entry.at("kind").get<std::string>();
  if (kind == "acme") {
    config.kind = acme::ExplainerKind::kAcme;
    config.acme.grid = acme::MakeQuantileGrid(
        entry.value("quantiles", acme::kDefaultQuantiles), entry.value("robust", false));
  } else if (kind == "kernel_shap") {
    config.kind = acme::ExplainerKind::kKernelShap;
    config.shap.coalitions = entry.value("coalitions", std::size_t{0});
    config.shap.draws = entry.value("draws", std::size_t{10});
    config.shap.seed = entry.value("seed", std::uint64_t{0});
    config.shap.exhaustive_background = entry.value("exhaustive_background", false);
    if (entry.contains("rows")) {
      const auto n = entry["rows"].get<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) config.shap.rows.push_back(i);
    }
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown explainer kind '" + kind + "'");
  }
  return config;
}

}  // namespace

extern "C" {

const char* acme_version(void) { return "0.1.0"; }

const char* acme_status_name(acme_status status) {
  switch (status) {
    case ACME_OK: return "ok";
    case ACME_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ACME_ERR_IO: return "io";
    case ACME_ERR_PARSE: return "parse";
    case ACME_ERR_DOMAIN: return "domain";
    case ACME_ERR_SHAPE: return "shape";
    case ACME_ERR_KIND: return "kind";
    case ACME_ERR_TASK: return "task";
    case ACME_ERR_SINGULAR: return "singular";
    case ACME_ERR_ADAPTER: return "adapter";
    case ACME_ERR_NOT_FOUND: return "not_found";
    case ACME_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* acme_last_error_message(void) { return last_error.c_str(); }

void acme_string_free(char* text) { std::free(text); }

acme_status acme_dataset_load_csv(const char* path, const char* target,
                                  acme_dataset** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    acme::CsvOptions options;
    if (target != nullptr) options.target = target;
    auto handle = std::make_unique<acme_dataset>();
    handle->data = std::make_shared<const acme::Dataset>(acme::LoadCsvFile(path, options));
    *out = handle.release();
  });
}

acme_status acme_dataset_from_preset(const char* preset, uint64_t seed,
                                     acme_dataset** out) {
  return Guard([&] {
    Require(preset, "preset");
    Require(out, "out");
    auto handle = std::make_unique<acme_dataset>();
    handle->synthetic = acme::SyntheticPreset(preset, seed);
    handle->data = std::make_shared<const acme::Dataset>(
        acme::GenerateLinearSynthetic(*handle->synthetic));
    *out = handle.release();
  });
}

acme_status acme_dataset_write_csv(const acme_dataset* dataset, const char* path) {
  return Guard([&] {
    Require(dataset, "dataset");
    Require(path, "path");
    std::ofstream file(path, std::ios::binary);
    if (!file) Fail(ErrorCode::kIo, std::string("cannot open ") + path + " for writing");
    acme::WriteCsv(*dataset->data, file);
    file.flush();
    if (!file) Fail(ErrorCode::kIo, std::string("write failed: ") + path);
  });
}

acme_status acme_dataset_shape(const acme_dataset* dataset, size_t* rows,
                               size_t* features) {
  return Guard([&] {
    Require(dataset, "dataset");
    if (rows != nullptr) *rows = dataset->data->n_rows();
    if (features != nullptr) *features = dataset->data->n_features();
  });
}

acme_status acme_dataset_feature(const acme_dataset* dataset, size_t index,
                                 const char** name, int* is_categorical) {
  return Guard([&] {
    Require(dataset, "dataset");
    if (index >= dataset->data->n_features()) {
      Fail(ErrorCode::kDomain, "feature index " + std::to_string(index) + " out of range");
    }
    const auto& column = dataset->data->feature(index);
    if (name != nullptr) *name = column.name().c_str();
    if (is_categorical != nullptr) *is_categorical = column.is_numeric() ? 0 : 1;
  });
}

void acme_dataset_free(acme_dataset* dataset) { delete dataset; }

acme_status acme_model_create(const acme_dataset* training, const char* spec,
                              acme_model** out) {
  return Guard([&] {
    Require(training, "training dataset");
    Require(spec, "spec");
    Require(out, "out");
    auto handle = std::make_unique<acme_model>();
    handle->predictor = acme::BuildModel(*training->data, acme::ParseModelSpec(spec));
    handle->spec = spec;
    *out = handle.release();
  });
}

acme_status acme_model_classes(const acme_model* model, size_t* n_classes) {
  return Guard([&] {
    Require(model, "model");
    Require(n_classes, "n_classes");
    *n_classes = model->predictor->task().n_classes();
  });
}

acme_status acme_model_predict(const acme_model* model, const acme_dataset* dataset,
                               double* values, size_t capacity) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(values, "values");
    const acme::Predictions p = acme::PredictBatch(*model->predictor, dataset->data->Matrix());
    if (capacity < p.values().size()) {
      Fail(ErrorCode::kShape, "output buffer holds " + std::to_string(capacity) +
                                  " values, need " + std::to_string(p.values().size()));
    }
    std::copy(p.values().begin(), p.values().end(), values);
  });
}

void acme_model_free(acme_model* model) { delete model; }

void acme_explain_options_init(acme_explain_options* options) {
  if (options == nullptr) return;
  options->quantiles = acme::kDefaultQuantiles;
  options->robust = 0;
  options->threads = 1;
}

acme_status acme_explain_global(const acme_model* model, const acme_dataset* dataset,
                                const acme_explain_options* options,
                                char** out_json) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(out_json, "out_json");
    const auto opts = ToOptions(options);
    const auto& m = *model->predictor;
    const std::string text =
        m.task().is_classification()
            ? acme::Serialize(acme::ToDocument(acme::ExplainClassification(
                  m, *dataset->data, acme::ExplainScope::kGlobal, 0, opts)))
            : acme::Serialize(acme::ToDocument(acme::ExplainGlobal(m, *dataset->data, opts)));
    *out_json = Dup(text);
  });
}

acme_status acme_explain_local(const acme_model* model, const acme_dataset* dataset,
                               size_t row, const acme_explain_options* options,
                               char** out_json) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(out_json, "out_json");
    const auto opts = ToOptions(options);
    const auto& m = *model->predictor;
    const std::string text =
        m.task().is_classification()
            ? acme::Serialize(acme::ToDocument(acme::ExplainClassification(
                  m, *dataset->data, acme::ExplainScope::kLocal, row, opts)))
            : acme::Serialize(
                  acme::ToDocument(acme::ExplainLocal(m, *dataset->data, row, opts)));
    *out_json = Dup(text);
  });
}

acme_status acme_what_if(const acme_model* model, const acme_dataset* dataset,
                         size_t row, const char* edits_json, char** out_json) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(out_json, "out_json");
    if (row >= dataset->data->n_rows()) {
      Fail(ErrorCode::kDomain, "row " + std::to_string(row) + " out of range [0, " +
                                   std::to_string(dataset->data->n_rows()) + ")");
    }
    const auto edits = acme::Document::parse(edits_json != nullptr ? edits_json : "{}");
    if (!edits.is_object()) Fail(ErrorCode::kInvalidArgument, "edits must be a JSON object");
    const acme::Schema& schema = *dataset->data->schema();
    std::vector<std::pair<std::size_t, acme::Cell>> cells;
    for (const auto& [name, value] : edits.items()) {
      const auto j = schema.IndexOf(name);
      if (!j) Fail(ErrorCode::kInvalidArgument, "unknown feature '" + name + "'");
      if (value.is_number()) {
        cells.emplace_back(*j, acme::Cell(value.get<double>()));
      } else if (value.is_string()) {
        cells.emplace_back(*j, acme::Cell(value.get<std::string>()));
      } else {
        Fail(ErrorCode::kKind, "edit for '" + name + "' must be a number or a string");
      }
    }
    const auto x = dataset->data->Row(row);
    const auto original = acme::PredictBatch(*model->predictor, x);
    const auto modified = acme::WhatIf(*model->predictor, x, cells);
    *out_json = Dup(acme::Serialize(
        acme::WhatIfDocument(original, modified, model->predictor->task())));
  });
}

void acme_shap_options_init(acme_shap_options* options) {
  if (options == nullptr) return;
  const acme::KernelShapOptions d;
  options->rows = nullptr;
  options->n_rows = 0;
  options->coalitions = d.coalitions;
  options->draws = d.draws;
  options->exhaustive_background = d.exhaustive_background ? 1 : 0;
  options->seed = d.seed;
  options->output = d.output;
  options->threads = d.threads;
}

acme_status acme_kernel_shap(const acme_model* model, const acme_dataset* dataset,
                             const acme_shap_options* options, char** out_json) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(out_json, "out_json");
    acme::ExplainerConfig config;
    config.kind = acme::ExplainerKind::kKernelShap;
    config.shap = ToShapOptions(options);
    const auto shap = acme::KernelShapExplain(*model->predictor, *dataset->data, config.shap);
    *out_json = Dup(acme::Serialize(
        acme::ToDocument(shap, *dataset->data->schema(), config.Params())));
  });
}

acme_status acme_exact_shapley(const acme_model* model, const acme_dataset* dataset,
                               size_t row, size_t output, double* phi, size_t p) {
  return Guard([&] {
    CheckPair(model, dataset);
    Require(phi, "phi");
    if (p != dataset->data->n_features()) {
      Fail(ErrorCode::kShape, "phi holds " + std::to_string(p) + " values, need " +
                                  std::to_string(dataset->data->n_features()));
    }
    if (row >= dataset->data->n_rows()) {
      Fail(ErrorCode::kDomain, "row " + std::to_string(row) + " out of range");
    }
    const auto values = acme::ExactShapley(*model->predictor, dataset->data->Row(row),
                                           dataset->data->Matrix(), output);
    std::copy(values.begin(), values.end(), phi);
  });
}

acme_status acme_render_svg(const char* document_json, acme_plot_kind kind,
                            size_t class_index, char** out_svg) {
  return Guard([&] {
    Require(document_json, "document_json");
    Require(out_svg, "out_svg");
    if (kind != ACME_PLOT_EFFECTS && kind != ACME_PLOT_BARS) {
      Fail(ErrorCode::kInvalidArgument, "unknown plot kind");
    }
    const auto doc = acme::Document::parse(document_json);
    const std::string doc_kind = doc.value("kind", std::string());
    std::string svg;
    if (doc_kind == "global") {
      const auto g = acme::GlobalFromDocument(doc);
      svg = kind == ACME_PLOT_EFFECTS ? acme::RenderEffectPlot(g) : acme::RenderImportanceBars(g);
    } else if (doc_kind == "local") {
      const auto l = acme::LocalFromDocument(doc);
      svg = kind == ACME_PLOT_EFFECTS ? acme::RenderEffectPlot(l) : acme::RenderImportanceBars(l);
    } else if (doc_kind == "classification-global" || doc_kind == "classification-local") {
      const auto c = acme::ClassificationFromDocument(doc);
      if (kind == ACME_PLOT_BARS) {
        svg = acme::RenderImportanceBars(c);
      } else if (class_index >= c.classes.size()) {
        Fail(ErrorCode::kDomain, "class index " + std::to_string(class_index) +
                                     " out of range for " +
                                     std::to_string(c.classes.size()) + " classes");
      } else if (c.scope == acme::ExplainScope::kGlobal) {
        svg = acme::RenderEffectPlot(c.global[class_index]);
      } else {
        svg = acme::RenderEffectPlot(c.local[class_index]);
      }
    } else {
      Fail(ErrorCode::kParse, "not an explanation document (kind '" + doc_kind + "')");
    }
    *out_svg = Dup(svg);
  });
}

acme_status acme_ndcg(const double* relevance, const size_t* ranking, size_t p,
                      double* out) {
  return Guard([&] {
    Require(relevance, "relevance");
    Require(ranking, "ranking");
    Require(out, "out");
    *out = acme::Ndcg({relevance, p}, {ranking, p});
  });
}

acme_status acme_kendall_tau(const size_t* a, const size_t* b, size_t p, double* out) {
  return Guard([&] {
    Require(a, "a");
    Require(b, "b");
    Require(out, "out");
    *out = acme::KendallTau({a, p}, {b, p});
  });
}

acme_status acme_benchmark(const char* config_json, char** out_jsonl) {
  return Guard([&] {
    Require(config_json, "config_json");
    Require(out_jsonl, "out_jsonl");
    const auto config = acme::Document::parse(config_json);
    std::vector<acme::BenchmarkTask> tasks;
    for (const auto& d : config.at("datasets")) {
      std::vector<double> reference;
      const auto data = LoadDatasetEntry(d, reference);
      const std::string dataset_name = d.value("name", std::string("dataset"));
      for (const auto& m : config.at("models")) {
        const std::string spec = m.get<std::string>();
        const auto model = acme::BuildModel(*data, acme::ParseModelSpec(spec));
        for (const auto& e : config.at("explainers")) {
          acme::BenchmarkTask task;
          task.explainer = ExplainerEntry(e);
          task.model = model;
          task.model_name = spec;
          task.dataset = data;
          task.dataset_name = dataset_name;
          task.reference_scores = reference;
          tasks.push_back(std::move(task));
        }
      }
    }
    const auto records =
        acme::BenchmarkExplainers(tasks, config.value("repetitions", std::size_t{1}));
    *out_jsonl = Dup(acme::BenchmarkJsonLines(records, config.value("mask_timing", false)));
  });
}

acme_status acme_service_create(acme_service** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new acme_service();
  });
}

acme_status acme_service_add_session(acme_service* service, const char* name,
                                     const acme_dataset* dataset,
                                     const acme_model* model,
                                     const acme_explain_options* options,
                                     char** out_id) {
  return Guard([&] {
    Require(service, "service");
    CheckPair(model, dataset);
    acme::SessionSource source;
    source.name = name != nullptr ? name : "";
    source.dataset = dataset->data;
    source.model = model->predictor;
    source.model_name = model->spec;
    source.options = ToOptions(options);
    const std::string id = service->service.AddSession(std::move(source));
    if (out_id != nullptr) *out_id = Dup(id);
  });
}

acme_status acme_service_handle(const acme_service* service, const char* method,
                                const char* path, const char* body, int* http_status,
                                char** out_body) {
  return Guard([&] {
    Require(service, "service");
    Require(method, "method");
    Require(path, "path");
    Require(http_status, "http_status");
    Require(out_body, "out_body");
    const auto r = service->service.Handle(method, path, body != nullptr ? body : "");
    *http_status = r.status;
    *out_body = Dup(r.body);
  });
}

acme_status acme_service_start(acme_service* service, const char* host, int port,
                               int* bound_port) {
  return Guard([&] {
    Require(service, "service");
    const int bound = service->service.Start(host != nullptr ? host : "127.0.0.1", port);
    if (bound_port != nullptr) *bound_port = bound;
  });
}

acme_status acme_service_run(acme_service* service, const char* host, int port) {
  return Guard([&] {
    Require(service, "service");
    service->service.Run(host != nullptr ? host : "127.0.0.1", port);
  });
}

void acme_service_stop(acme_service* service) {
  if (service != nullptr) service->service.Stop();
}

void acme_service_free(acme_service* service) { delete service; }

}  // extern "C"
