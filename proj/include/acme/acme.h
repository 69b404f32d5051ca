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

/* C interface to the AcME toolkit.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an acme_status; on failure the message is
 * available from acme_last_error_message() on the same thread. Strings
 * returned through char** out-parameters are owned by the caller and must
 * be released with acme_string_free().
 */

#ifndef ACME_ACME_H_
#define ACME_ACME_H_

#include <stddef.h>
#include <stdint.h>

#if defined(ACME_BUILDING_LIBRARY)
#define ACME_API __attribute__((visibility("default")))
#else
#define ACME_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acme_status {
  ACME_OK = 0,
  ACME_ERR_INVALID_ARGUMENT = 1,
  ACME_ERR_IO = 2,
  ACME_ERR_PARSE = 3,
  ACME_ERR_DOMAIN = 4,
  ACME_ERR_SHAPE = 5,
  ACME_ERR_KIND = 6,
  ACME_ERR_TASK = 7,
  ACME_ERR_SINGULAR = 8,
  ACME_ERR_ADAPTER = 9,
  ACME_ERR_NOT_FOUND = 10,
  ACME_ERR_INTERNAL = 99
} acme_status;

typedef struct acme_dataset acme_dataset;
typedef struct acme_model acme_model;
typedef struct acme_service acme_service;

ACME_API const char* acme_version(void);
ACME_API const char* acme_status_name(acme_status status);
/* Message of the last failed call on this thread, "" if none. */
ACME_API const char* acme_last_error_message(void);
ACME_API void acme_string_free(char* text);

/* ---- datasets ---- */

/* target may be NULL for a features-only table. */
ACME_API acme_status acme_dataset_load_csv(const char* path, const char* target,
                                           acme_dataset** out);
/* "experiment1" or "experiment2"; the target column is named "y". */
ACME_API acme_status acme_dataset_from_preset(const char* preset, uint64_t seed,
                                              acme_dataset** out);
ACME_API acme_status acme_dataset_write_csv(const acme_dataset* dataset,
                                            const char* path);
ACME_API acme_status acme_dataset_shape(const acme_dataset* dataset,
                                        size_t* rows, size_t* features);
/* name stays valid while the dataset lives. */
ACME_API acme_status acme_dataset_feature(const acme_dataset* dataset,
                                          size_t index, const char** name,
                                          int* is_categorical);
ACME_API void acme_dataset_free(acme_dataset* dataset);

/* ---- models ---- */

/* spec: "linear", "knn[:k]", "knn-classifier[:k]",
 * "external:regression:<cmd>" or "external:classification:<cmd>".
 * The model is fitted on (or bound to) the training dataset's schema. */
ACME_API acme_status acme_model_create(const acme_dataset* training,
                                       const char* spec, acme_model** out);
/* n_classes is 0 for regression models. */
ACME_API acme_status acme_model_classes(const acme_model* model,
                                        size_t* n_classes);
/* One prediction row per dataset row, row-major, width max(1, n_classes).
 * values must hold rows * width doubles. */
ACME_API acme_status acme_model_predict(const acme_model* model,
                                        const acme_dataset* dataset,
                                        double* values, size_t capacity);
ACME_API void acme_model_free(acme_model* model);

/* ---- AcME explanations ---- */

typedef struct acme_explain_options {
  size_t quantiles; /* grid size Q, at least 2 */
  int robust;       /* nonzero: grid over [0.1, 0.9] */
  size_t threads;   /* 0 = hardware count; results do not depend on it */
} acme_explain_options;

ACME_API void acme_explain_options_init(acme_explain_options* options);

/* Explanation documents as JSON text. Classification models yield the
 * per-class bundle. options may be NULL for defaults. */
ACME_API acme_status acme_explain_global(const acme_model* model,
                                         const acme_dataset* dataset,
                                         const acme_explain_options* options,
                                         char** out_json);
ACME_API acme_status acme_explain_local(const acme_model* model,
                                        const acme_dataset* dataset, size_t row,
                                        const acme_explain_options* options,
                                        char** out_json);
/* edits_json: {"feature": value, ...} with numbers for numeric features and
 * level strings for categorical ones. Returns the delta document. */
ACME_API acme_status acme_what_if(const acme_model* model,
                                  const acme_dataset* dataset, size_t row,
                                  const char* edits_json, char** out_json);

/* ---- KernelSHAP ---- */

typedef struct acme_shap_options {
  const size_t* rows;        /* rows to explain; NULL = all rows */
  size_t n_rows;
  size_t coalitions;         /* 0 = 2048 + 2p */
  size_t draws;              /* background rows per coalition */
  int exhaustive_background; /* nonzero: average over the whole background */
  uint64_t seed;
  size_t output;             /* class index for classifiers */
  size_t threads;
} acme_shap_options;

ACME_API void acme_shap_options_init(acme_shap_options* options);
ACME_API acme_status acme_kernel_shap(const acme_model* model,
                                      const acme_dataset* dataset,
                                      const acme_shap_options* options,
                                      char** out_json);
/* Exact Shapley values of one row, averaging over the whole dataset as
 * background. phi must hold p doubles. Refuses more than 12 features. */
ACME_API acme_status acme_exact_shapley(const acme_model* model,
                                        const acme_dataset* dataset, size_t row,
                                        size_t output, double* phi, size_t p);

/* ---- plots ---- */

typedef enum acme_plot_kind {
  ACME_PLOT_EFFECTS = 0, /* quantile effect tracks */
  ACME_PLOT_BARS = 1     /* importance bars, stacked for classification */
} acme_plot_kind;

/* Renders an explanation document produced by this library. For
 * classification documents the effect plot shows class class_index. */
ACME_API acme_status acme_render_svg(const char* document_json,
                                     acme_plot_kind kind, size_t class_index,
                                     char** out_svg);

/* ---- metrics and benchmarks ---- */

ACME_API acme_status acme_ndcg(const double* relevance, const size_t* ranking,
                               size_t p, double* out);
ACME_API acme_status acme_kendall_tau(const size_t* a, const size_t* b,
                                      size_t p, double* out);

/* Runs the benchmark described by config_json and returns JSON lines, one
 * record per (dataset, model, explainer) cell:
 *
 *   {"datasets": [{"name": s, "preset": s, "seed": n} |
 *                 {"name": s, "csv": path, "target": s}],
 *    "models": ["linear", ...],
 *    "explainers": [{"kind": "acme", "quantiles": n, "robust": b} |
 *                   {"kind": "kernel_shap", "coalitions": n, "draws": n,
 *                    "rows": n, "seed": n, "exhaustive_background": b}],
 *    "repetitions": n, "mask_timing": b}
 *
 * Preset datasets carry reference scores, which add ndcg and kendall
 * columns. "rows" explains the first n rows only. */
ACME_API acme_status acme_benchmark(const char* config_json, char** out_jsonl);

/* ---- service ---- */

ACME_API acme_status acme_service_create(acme_service** out);
/* Copies the handles' contents; the caller may free them afterwards. out_id
 * may be NULL. */
ACME_API acme_status acme_service_add_session(acme_service* service,
                                              const char* name,
                                              const acme_dataset* dataset,
                                              const acme_model* model,
                                              const acme_explain_options* options,
                                              char** out_id);
/* Routes one request in-process. body may be NULL. */
ACME_API acme_status acme_service_handle(const acme_service* service,
                                         const char* method, const char* path,
                                         const char* body, int* http_status,
                                         char** out_body);
/* Serves on a background thread; port 0 picks a free port. */
ACME_API acme_status acme_service_start(acme_service* service, const char* host,
                                        int port, int* bound_port);
/* Serves on the calling thread until acme_service_stop. */
ACME_API acme_status acme_service_run(acme_service* service, const char* host,
                                      int port);
ACME_API void acme_service_stop(acme_service* service);
ACME_API void acme_service_free(acme_service* service);

#ifdef __cplusplus
}
#endif

#endif /* ACME_ACME_H_ */
