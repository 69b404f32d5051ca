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

#ifndef ACME_DOCUMENT_HPP_
#define ACME_DOCUMENT_HPP_

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "acme/engine.hpp"
#include "acme/evaluation.hpp"
#include "acme/kernel_shap.hpp"
#include "acme/model.hpp"

namespace acme {

// Explanation documents keep keys in insertion (schema) order.
using Document = nlohmann::ordered_json;

// Global document:
//   {"kind": "global", "baseline": [...], "baseline_prediction": x,
//    "ranking": [...], "features": [{"name", "index", "kind",
//    "quantile_levels", "probe_values", "predictions", "effects",
//    "importance"}, ...]}
// Categorical features list their level labels as quantile_levels and
// probe_values.
Document ToDocument(const GlobalExplanation& explanation);

// Local document: the global layout with "kind": "local", plus "row",
// "actual_prediction" and "observation_quantile". "baseline" holds the
// observation, "ranking" the local ordering, "predictions" raw outputs.
Document ToDocument(const LocalExplanation& explanation);

// {"kind": "classification-global" | "classification-local",
//  ["row": i,] "classes": [...], "per_class": [<global/local body>, ...],
//  "stacked_importance": [...], "ranking": [...]}
Document ToDocument(const ClassificationExplanation& explanation);

Document ToDocument(const GlobalShap& shap, const Schema& schema,
                    const std::string& params);

// {"original": f(x), "modified": f(x with edits), "delta": modified - original}
// with per-class arrays for classification models.
Document WhatIfDocument(const Predictions& original, const Predictions& modified,
                        const Task& task);

// One JSON object per benchmark cell. With mask_timing the timing fields are
// null so that the output is byte-reproducible.
Document ToDocument(const BenchmarkRecord& record, bool mask_timing);
std::string BenchmarkJsonLines(std::span<const BenchmarkRecord> records,
                               bool mask_timing);

GlobalExplanation GlobalFromDocument(const Document& document);
LocalExplanation LocalFromDocument(const Document& document);
ClassificationExplanation ClassificationFromDocument(const Document& document);

// Deterministic text: 2-space indentation, scalar arrays on one line, reals
// with 17 significant digits, non-finite reals as null.
std::string Serialize(const Document& document);
// Single-line variant used for line-delimited output.
std::string SerializeCompact(const Document& document);

void WriteTextFile(const std::string& path, const std::string& text);
std::string ReadTextFile(const std::string& path);

}  // namespace acme

#endif  // ACME_DOCUMENT_HPP_
