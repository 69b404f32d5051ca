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

#include "acme/service.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <httplib.h>

#include "acme/document.hpp"
#include "acme/error.hpp"

namespace acme {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void Mix(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

struct Session {
  std::string id;
  SessionSource source;
  mutable std::once_flag global_once;
  mutable std::string global_body;
};

HttpResponse Json(int status, const Document& document) {
  return {status, Serialize(document)};
}

HttpResponse ErrorResponse(int status, const std::string& message) {
  Document d;
  d["error"] = message;
  return Json(status, d);
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kAdapter:
    case ErrorCode::kInternal:
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

std::vector<std::string_view> SplitPath(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::size_t ParseRow(std::string_view text, std::size_t n) {
  std::size_t row = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), row);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    Fail(ErrorCode::kInvalidArgument,
         "row must be a non-negative integer, got '" + std::string(text) + "'");
  }
  if (row >= n) {
    Fail(ErrorCode::kDomain, "row " + std::to_string(row) + " out of range [0, " +
                                 std::to_string(n) + ")");
  }
  return row;
}

std::string GlobalBody(const Session& s) {
  const auto& src = s.source;
  if (src.model->task().is_classification()) {
    return Serialize(ToDocument(ExplainClassification(
        *src.model, *src.dataset, ExplainScope::kGlobal, 0, src.options)));
  }
  return Serialize(ToDocument(ExplainGlobal(*src.model, *src.dataset, src.options)));
}

std::string LocalBody(const Session& s, std::size_t row) {
  const auto& src = s.source;
  if (src.model->task().is_classification()) {
    return Serialize(ToDocument(ExplainClassification(
        *src.model, *src.dataset, ExplainScope::kLocal, row, src.options)));
  }
  return Serialize(ToDocument(ExplainLocal(*src.model, *src.dataset, row, src.options)));
}

std::string WhatIfBody(const Session& s, std::string_view body) {
  const auto& src = s.source;
  Document request;
  try {
    request = Document::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("malformed request body: ") + e.what());
  }
  if (!request.is_object() || !request.contains("row")) {
    Fail(ErrorCode::kInvalidArgument, "request body needs a \"row\" field");
  }
  const auto& row_field = request["row"];
  if (!row_field.is_number_integer() || row_field.get<long long>() < 0) {
    Fail(ErrorCode::kInvalidArgument, "\"row\" must be a non-negative integer");
  }
  const std::size_t row = row_field.get<std::size_t>();
  if (row >= src.dataset->n_rows()) {
    Fail(ErrorCode::kDomain, "row " + std::to_string(row) + " out of range [0, " +
                                 std::to_string(src.dataset->n_rows()) + ")");
  }
  std::vector<std::pair<std::size_t, Cell>> edits;
  if (request.contains("edits")) {
    const auto& map = request["edits"];
    if (!map.is_object()) Fail(ErrorCode::kInvalidArgument, "\"edits\" must be an object");
    const Schema& schema = *src.dataset->schema();
    for (const auto& [name, value] : map.items()) {
      const auto j = schema.IndexOf(name);
      if (!j) Fail(ErrorCode::kInvalidArgument, "unknown feature '" + name + "'");
      if (value.is_number()) {
        edits.emplace_back(*j, Cell(value.get<double>()));
      } else if (value.is_string()) {
        edits.emplace_back(*j, Cell(value.get<std::string>()));
      } else {
        Fail(ErrorCode::kKind, "edit for '" + name + "' must be a number or a string");
      }
    }
  }
  const FeatureMatrix x = src.dataset->Row(row);
  const Predictions original = PredictBatch(*src.model, x);
  const Predictions modified = WhatIf(*src.model, x, edits);
  return Serialize(WhatIfDocument(original, modified, src.model->task()));
}

}  // namespace

std::string SessionId(const SessionSource& source) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t fp = source.dataset->Fingerprint();
  Mix(h, &fp, sizeof fp);
  Mix(h, source.model_name.data(), source.model_name.size());
  for (double q : source.options.grid.levels) Mix(h, &q, sizeof q);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ExplainService::Impl {
  std::map<std::string, std::unique_ptr<Session>> sessions;
  std::vector<std::string> order;
  httplib::Server server;
  std::thread worker;
  bool bound = false;
};

ExplainService::ExplainService() : impl_(std::make_unique<Impl>()) {}

ExplainService::~ExplainService() { Stop(); }

std::string ExplainService::AddSession(SessionSource source) {
  if (!source.dataset || !source.model) {
    Fail(ErrorCode::kInvalidArgument, "session needs a dataset and a model");
  }
  if (source.model->schema().size() != source.dataset->n_features()) {
    Fail(ErrorCode::kShape, "model and dataset feature counts differ");
  }
  auto session = std::make_unique<Session>();
  session->id = SessionId(source);
  if (impl_->sessions.count(session->id) != 0) {
    Fail(ErrorCode::kInvalidArgument, "duplicate session for dataset and model '" +
                                          source.model_name + "'");
  }
  session->source = std::move(source);
  const std::string id = session->id;
  impl_->sessions.emplace(id, std::move(session));
  impl_->order.push_back(id);
  return id;
}

std::vector<std::string> ExplainService::SessionIds() const { return impl_->order; }

HttpResponse ExplainService::Handle(std::string_view method, std::string_view path,
                                    std::string_view body) const {
  try {
    const auto parts = SplitPath(path);
    if (parts.empty() || parts[0] != "sessions") {
      return ErrorResponse(404, "no route for " + std::string(path));
    }
    if (parts.size() == 1) {
      if (method != "GET") return ErrorResponse(405, "method not allowed");
      Document list = Document::array();
      for (const auto& id : impl_->order) {
        const auto& src = impl_->sessions.at(id)->source;
        Document entry;
        entry["id"] = id;
        entry["name"] = src.name;
        entry["task"] = src.model->task().is_classification() ? "classification"
                                                              : "regression";
        entry["n"] = src.dataset->n_rows();
        entry["p"] = src.dataset->n_features();
        if (src.model->task().is_classification()) {
          entry["class_names"] = src.model->task().class_names;
        }
        list.push_back(std::move(entry));
      }
      return Json(200, list);
    }
    const auto it = impl_->sessions.find(std::string(parts[1]));
    if (it == impl_->sessions.end()) {
      return ErrorResponse(404, "unknown session '" + std::string(parts[1]) + "'");
    }
    const Session& s = *it->second;
    if (parts.size() == 4 && parts[2] == "explain" && parts[3] == "global") {
      if (method != "GET") return ErrorResponse(405, "method not allowed");
      std::call_once(s.global_once, [&s] { s.global_body = GlobalBody(s); });
      return {200, s.global_body};
    }
    if (parts.size() == 5 && parts[2] == "explain" && parts[3] == "local") {
      if (method != "GET") return ErrorResponse(405, "method not allowed");
      return {200, LocalBody(s, ParseRow(parts[4], s.source.dataset->n_rows()))};
    }
    if (parts.size() == 3 && parts[2] == "whatif") {
      if (method != "POST") return ErrorResponse(405, "method not allowed");
      return {200, WhatIfBody(s, body)};
    }
    return ErrorResponse(404, "no route for " + std::string(path));
  } catch (const Error& e) {
    return ErrorResponse(StatusFor(e.code()), e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, e.what());
  }
}

int ExplainService::Bind(const std::string& host, int port) {
  if (impl_->sessions.empty()) Fail(ErrorCode::kInvalidArgument, "no sessions configured");
  if (impl_->bound) Fail(ErrorCode::kInvalidArgument, "service already running");
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  // httplib's default also sets SO_REUSEPORT, which lets a second server
  // share a busy port silently.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
               sizeof(yes));
  });
  impl_->server.Get(R"(/.*)", forward);
  impl_->server.Post(R"(/.*)", forward);
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) {
    Fail(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound;
}

int ExplainService::Start(const std::string& host, int port) {
  const int bound = Bind(host, port);
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ExplainService::Run(const std::string& host, int port) {
  Bind(host, port);
  impl_->server.listen_after_bind();
}

void ExplainService::Stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace acme
