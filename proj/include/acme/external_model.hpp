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

#ifndef ACME_EXTERNAL_MODEL_HPP_
#define ACME_EXTERNAL_MODEL_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "acme/model.hpp"

namespace acme {

struct ExternalModelOptions {
  std::chrono::milliseconds timeout{30000};  // per batch
};

// Predictor backed by a child process (run via /bin/sh -c) that speaks a
// line-delimited JSON protocol on stdin/stdout:
//
//   request:  {"id": 7, "rows": [[1.5, "red"], ...]}
//   response: {"id": 7, "predictions": [0.25, ...]}      regression
//             {"id": 7, "predictions": [[0.1, 0.9], ...]} classification
//
// Categorical cells are sent as their level text. Batches are serialized
// over the single child. Any protocol failure discards the child; the next
// batch starts a fresh one.
class ExternalModel final : public Predictor {
 public:
  ExternalModel(std::string command, std::shared_ptr<const Schema> schema,
                Task task, ExternalModelOptions options = {});
  ~ExternalModel() override;

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  const std::string& command() const { return command_; }

  std::string Describe() const override;
  Predictions PredictRows(const FeatureMatrix& rows) const override;

 private:
  class Child;

  std::string command_;
  ExternalModelOptions options_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Child> child_;
  mutable std::int64_t next_id_ = 0;
};

}  // namespace acme

#endif  // ACME_EXTERNAL_MODEL_HPP_
