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

#include "acme/document.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "acme/error.hpp"

namespace acme {
namespace {

std::string FormatReal(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool IsScalar(const Document& d) { return !d.is_object() && !d.is_array(); }

void WriteScalar(const Document& d, std::string& out) {
  if (d.is_number_float()) {
    out += FormatReal(d.get<double>());
  } else {
    out += d.dump();
  }
}

void WriteValue(const Document& d, std::string& out, int indent, bool pretty) {
  const std::string pad = pretty ? std::string(indent + 2, ' ') : "";
  const std::string close_pad = pretty ? std::string(indent, ' ') : "";
  const char* newline = pretty ? "\n" : "";
  const char* colon = pretty ? ": " : ":";
  if (d.is_object()) {
    if (d.empty()) {
      out += "{}";
      return;
    }
    out += '{';
    out += newline;
    bool first = true;
    for (const auto& [key, value] : d.items()) {
      if (!first) {
        out += ',';
        out += newline;
      }
      first = false;
      out += pad;
      out += Document(key).dump();
      out += colon;
      WriteValue(value, out, indent + 2, pretty);
    }
    out += newline;
    out += close_pad;
    out += '}';
    return;
  }
  if (d.is_array()) {
    const bool flat = std::all_of(d.begin(), d.end(), IsScalar);
    if (flat || !pretty) {
      out += '[';
      bool first = true;
      for (const auto& item : d) {
        if (!first) out += pretty ? ", " : ",";
        first = false;
        if (IsScalar(item)) {
          WriteScalar(item, out);
        } else {
          WriteValue(item, out, indent, pretty);
        }
      }
      out += ']';
      return;
    }
    out += "[\n";
    bool first = true;
    for (const auto& item : d) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      WriteValue(item, out, indent + 2, pretty);
    }
    out += '\n';
    out += close_pad;
    out += ']';
    return;
  }
  WriteScalar(d, out);
}

Document CellJson(const Schema& schema, std::size_t j, double stored) {
  const Cell cell = schema.Decode(j, stored);
  if (const double* v = std::get_if<double>(&cell)) return *v;
  return std::get<std::string>(cell);
}

Document FeatureJson(const Schema& schema, const FeatureEffect& effect) {
  const FeatureInfo& info = schema[effect.feature];
  Document f;
  f["name"] = info.name;
  f["index"] = effect.feature;
  f["kind"] = std::string(KindName(info.kind));
  if (info.kind == FeatureKind::kNumeric) {
    f["quantile_levels"] = effect.quantile_levels;
    f["probe_values"] = effect.probe_values;
  } else {
    Document labels = Document::array();
    for (double code : effect.probe_values) {
      labels.push_back(info.levels[static_cast<std::size_t>(code)]);
    }
    f["quantile_levels"] = labels;
    f["probe_values"] = labels;
  }
  f["predictions"] = effect.predictions;
  f["effects"] = effect.effects;
  f["importance"] = effect.importance;
  return f;
}

Document CellsJson(const Schema& schema, std::span<const double> stored) {
  Document out = Document::array();
  for (std::size_t j = 0; j < stored.size(); ++j) {
    out.push_back(CellJson(schema, j, stored[j]));
  }
  return out;
}

const Document& Require(const Document& d, const char* key) {
  if (!d.is_object() || !d.contains(key)) {
    Fail(ErrorCode::kParse, std::string("document lacks \"") + key + "\"");
  }
  return d.at(key);
}

std::vector<double> Reals(const Document& d, const char* key) {
  const Document& a = Require(d, key);
  std::vector<double> out;
  for (const auto& v : a) {
    out.push_back(v.is_null() ? std::nan("") : v.get<double>());
  }
  return out;
}

std::vector<std::size_t> Indices(const Document& d, const char* key) {
  return Require(d, key).get<std::vector<std::size_t>>();
}

std::shared_ptr<const Schema> SchemaFromFeatures(const Document& features) {
  std::vector<FeatureInfo> infos(features.size());
  for (const auto& f : features) {
    const auto j = Require(f, "index").get<std::size_t>();
    if (j >= infos.size()) Fail(ErrorCode::kParse, "feature index out of range");
    FeatureInfo& info = infos[j];
    info.name = Require(f, "name").get<std::string>();
    const std::string kind = f.value("kind", std::string("numeric"));
    if (kind == "categorical") {
      info.kind = FeatureKind::kCategorical;
      info.levels = Require(f, "probe_values").get<std::vector<std::string>>();
    } else {
      info.kind = FeatureKind::kNumeric;
    }
  }
  return std::make_shared<const Schema>(std::move(infos));
}

FeatureEffect EffectFromJson(const Schema& schema, const Document& f) {
  FeatureEffect e;
  e.feature = Require(f, "index").get<std::size_t>();
  const FeatureInfo& info = schema[e.feature];
  if (info.kind == FeatureKind::kNumeric) {
    e.quantile_levels = Reals(f, "quantile_levels");
    e.probe_values = Reals(f, "probe_values");
  } else {
    const std::size_t m = info.levels.size();
    for (std::size_t i = 0; i < m; ++i) {
      e.quantile_levels.push_back(
          m > 1 ? static_cast<double>(i) / static_cast<double>(m - 1) : 0.0);
      e.probe_values.push_back(static_cast<double>(i));
    }
  }
  e.predictions = Reals(f, "predictions");
  e.effects = Reals(f, "effects");
  e.importance = Require(f, "importance").get<double>();
  return e;
}

std::vector<double> CellsFromJson(const Schema& schema, const Document& cells) {
  if (cells.size() != schema.size()) {
    Fail(ErrorCode::kParse, "cell list length does not match feature count");
  }
  std::vector<double> out;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (cells[j].is_string()) {
      out.push_back(schema.Encode(j, cells[j].get<std::string>()));
    } else {
      out.push_back(schema.Encode(j, cells[j].get<double>()));
    }
  }
  return out;
}

void RequireKind(const Document& d, const std::string& kind) {
  const std::string actual = Require(d, "kind").get<std::string>();
  if (actual != kind) {
    Fail(ErrorCode::kParse,
         "expected a \"" + kind + "\" document, got \"" + actual + "\"");
  }
}

}  // namespace

Document ToDocument(const GlobalExplanation& g) {
  Document d;
  d["kind"] = "global";
  d["baseline"] = CellsJson(*g.schema, g.baseline.entries);
  d["baseline_prediction"] = g.baseline_prediction;
  d["ranking"] = g.ranking;
  Document features = Document::array();
  for (const auto& e : g.effects) features.push_back(FeatureJson(*g.schema, e));
  d["features"] = std::move(features);
  return d;
}

Document ToDocument(const LocalExplanation& l) {
  Document d;
  d["kind"] = "local";
  d["row"] = l.row;
  d["baseline"] = CellsJson(*l.schema, l.observation);
  d["baseline_prediction"] = l.actual_prediction;
  d["actual_prediction"] = l.actual_prediction;
  d["observation_quantile"] = l.observation_quantile;
  d["ranking"] = l.ordering;
  Document features = Document::array();
  for (const auto& e : l.effects) features.push_back(FeatureJson(*l.schema, e));
  d["features"] = std::move(features);
  return d;
}

Document ToDocument(const ClassificationExplanation& c) {
  Document d;
  const bool global = c.scope == ExplainScope::kGlobal;
  d["kind"] = global ? "classification-global" : "classification-local";
  if (!global && !c.local.empty()) d["row"] = c.local.front().row;
  d["classes"] = c.classes;
  Document bodies = Document::array();
  if (global) {
    for (const auto& g : c.global) bodies.push_back(ToDocument(g));
  } else {
    for (const auto& l : c.local) bodies.push_back(ToDocument(l));
  }
  d["per_class"] = std::move(bodies);
  d["stacked_importance"] = c.stacked_importance;
  d["ranking"] = c.ranking;
  return d;
}

Document ToDocument(const GlobalShap& shap, const Schema& schema,
                    const std::string& params) {
  Document d;
  d["kind"] = "kernelshap";
  d["params"] = params;
  Document names = Document::array();
  for (const auto& f : schema.features()) names.push_back(f.name);
  d["feature_names"] = std::move(names);
  d["phi0"] = shap.per_row.empty() ? 0.0 : shap.per_row.front().phi0;
  d["importance"] = shap.importance;
  d["ranking"] = shap.ranking;
  Document rows = Document::array();
  for (const auto& a : shap.per_row) {
    Document r;
    r["row"] = a.row_index;
    r["phi"] = a.phi;
    rows.push_back(std::move(r));
  }
  d["rows"] = std::move(rows);
  return d;
}

Document WhatIfDocument(const Predictions& original, const Predictions& modified,
                        const Task& task) {
  Document d;
  if (!task.is_classification()) {
    d["original"] = original(0, 0);
    d["modified"] = modified(0, 0);
    d["delta"] = modified(0, 0) - original(0, 0);
    return d;
  }
  std::vector<double> delta(original.width());
  for (std::size_t c = 0; c < delta.size(); ++c) {
    delta[c] = modified(0, c) - original(0, c);
  }
  const auto o = original.row(0);
  const auto m = modified.row(0);
  d["classes"] = task.class_names;
  d["original"] = std::vector<double>(o.begin(), o.end());
  d["modified"] = std::vector<double>(m.begin(), m.end());
  d["delta"] = delta;
  return d;
}

Document ToDocument(const BenchmarkRecord& r, bool mask_timing) {
  Document d;
  d["explainer"] = r.explainer;
  d["model"] = r.model;
  d["dataset"] = r.dataset;
  d["n"] = r.n;
  d["p"] = r.p;
  d["params"] = r.params;
  if (mask_timing) {
    d["median_seconds"] = nullptr;
    d["seconds"] = nullptr;
  } else {
    d["median_seconds"] = r.median_seconds;
    d["seconds"] = r.seconds;
  }
  d["ndcg"] = r.ndcg ? Document(*r.ndcg) : Document(nullptr);
  d["kendall_full"] = r.kendall_full ? Document(*r.kendall_full) : Document(nullptr);
  d["ranking"] = r.ranking;
  if (r.error) d["error"] = *r.error;
  return d;
}

std::string BenchmarkJsonLines(std::span<const BenchmarkRecord> records,
                               bool mask_timing) {
  std::string out;
  for (const auto& r : records) {
    out += SerializeCompact(ToDocument(r, mask_timing));
    out += '\n';
  }
  return out;
}

GlobalExplanation GlobalFromDocument(const Document& d) {
  RequireKind(d, "global");
  GlobalExplanation g;
  g.schema = SchemaFromFeatures(Require(d, "features"));
  g.baseline.origin = BaselineOrigin::kGlobalMeanMode;
  g.baseline.entries = CellsFromJson(*g.schema, Require(d, "baseline"));
  g.baseline_prediction = Require(d, "baseline_prediction").get<double>();
  g.ranking = Indices(d, "ranking");
  g.effects.resize(g.schema->size());
  for (const auto& f : d.at("features")) {
    FeatureEffect e = EffectFromJson(*g.schema, f);
    g.effects[e.feature] = std::move(e);
  }
  return g;
}

LocalExplanation LocalFromDocument(const Document& d) {
  RequireKind(d, "local");
  LocalExplanation l;
  l.schema = SchemaFromFeatures(Require(d, "features"));
  l.row = Require(d, "row").get<std::size_t>();
  l.observation = CellsFromJson(*l.schema, Require(d, "baseline"));
  l.actual_prediction = Require(d, "actual_prediction").get<double>();
  l.observation_quantile = Reals(d, "observation_quantile");
  l.ordering = Indices(d, "ranking");
  l.effects.resize(l.schema->size());
  for (const auto& f : d.at("features")) {
    FeatureEffect e = EffectFromJson(*l.schema, f);
    l.effects[e.feature] = std::move(e);
  }
  return l;
}

ClassificationExplanation ClassificationFromDocument(const Document& d) {
  const std::string kind = Require(d, "kind").get<std::string>();
  ClassificationExplanation c;
  if (kind == "classification-global") {
    c.scope = ExplainScope::kGlobal;
  } else if (kind == "classification-local") {
    c.scope = ExplainScope::kLocal;
  } else {
    Fail(ErrorCode::kParse, "expected a classification document, got \"" + kind + "\"");
  }
  c.classes = Require(d, "classes").get<std::vector<std::string>>();
  for (const auto& body : Require(d, "per_class")) {
    if (c.scope == ExplainScope::kGlobal) {
      c.global.push_back(GlobalFromDocument(body));
    } else {
      c.local.push_back(LocalFromDocument(body));
    }
  }
  c.stacked_importance = Reals(d, "stacked_importance");
  c.ranking = Indices(d, "ranking");
  return c;
}

std::string Serialize(const Document& document) {
  std::string out;
  WriteValue(document, out, 0, true);
  out += '\n';
  return out;
}

std::string SerializeCompact(const Document& document) {
  std::string out;
  WriteValue(document, out, 0, false);
  return out;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) Fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace acme
