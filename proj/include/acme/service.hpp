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

#ifndef ACME_SERVICE_HPP_
#define ACME_SERVICE_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "acme/engine.hpp"
#include "acme/model.hpp"
#include "acme/tabular.hpp"

namespace acme {

struct SessionSource {
  std::string name;
  std::shared_ptr<const Dataset> dataset;
  std::shared_ptr<const Predictor> model;
  std::string model_name;  // model selector text, part of the session id
  ExplainOptions options;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

// Explanation and what-if endpoints over sessions fixed at construction
// time. Handlers never mutate a session; the global explanation is computed
// once on first request and then served from cache.
//
//   GET  /sessions
//   GET  /sessions/{id}/explain/global
//   GET  /sessions/{id}/explain/local/{row}
//   POST /sessions/{id}/whatif    {"row": i, "edits": {"name": value}}
//
// Errors are {"error": message} with a 4xx or 5xx status.
class ExplainService {
 public:
  ExplainService();
  ~ExplainService();
  ExplainService(const ExplainService&) = delete;
  ExplainService& operator=(const ExplainService&) = delete;

  // Returns the new session id. Adding a second session for the same
  // dataset, model and grid fails.
  std::string AddSession(SessionSource source);
  std::vector<std::string> SessionIds() const;

  // Routes one request without any network involved.
  HttpResponse Handle(std::string_view method, std::string_view path,
                      std::string_view body) const;

  // Binds host:port (0 picks a free port) and serves on a background
  // thread. Throws kIo when the port cannot be bound. Returns the port.
  int Start(const std::string& host, int port);
  // Binds like Start and serves on the calling thread until Stop.
  void Run(const std::string& host, int port);
  void Stop();

 private:
  int Bind(const std::string& host, int port);

  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// FNV-1a over the dataset fingerprint, model selector and grid, in hex.
std::string SessionId(const SessionSource& source);

}  // namespace acme

#endif  // ACME_SERVICE_HPP_
