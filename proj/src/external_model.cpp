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

#include "acme/external_model.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <json.hpp>
#include <vector>

#include "acme/error.hpp"

extern char** environ;

namespace acme {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr std::size_t kStderrTail = 4096;

void IgnoreSigpipeOnce() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void SetNonBlocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string DescribeWaitStatus(int status) {
  if (WIFEXITED(status)) {
    return "exit status " + std::to_string(WEXITSTATUS(status));
  }
  if (WIFSIGNALED(status)) {
    return "killed by signal " + std::to_string(WTERMSIG(status));
  }
  return "unknown status";
}

}  // namespace

class ExternalModel::Child {
 public:
  explicit Child(const std::string& command) {
    int in[2], out[2], err[2];
    if (::pipe2(in, O_CLOEXEC) != 0 || ::pipe2(out, O_CLOEXEC) != 0 ||
        ::pipe2(err, O_CLOEXEC) != 0) {
      Fail(ErrorCode::kAdapter, std::string("pipe failed: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err[1], STDERR_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in[0]);
    ::close(out[1]);
    ::close(err[1]);
    stdin_ = in[1];
    stdout_ = out[0];
    stderr_ = err[0];
    if (rc != 0) {
      CloseAll();
      Fail(ErrorCode::kAdapter,
           "cannot start external model: " + std::string(std::strerror(rc)));
    }
    SetNonBlocking(stdin_);
    SetNonBlocking(stdout_);
    SetNonBlocking(stderr_);
  }

  ~Child() {
    CloseFd(stdin_);  // EOF lets a well-behaved child exit on its own
    bool exited = false;
    for (int i = 0; i < 50 && !exited; ++i) {
      int status = 0;
      exited = ::waitpid(pid_, &status, WNOHANG) == pid_;
      if (!exited) ::usleep(2000);
    }
    if (!exited) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    CloseAll();
  }

  // Sends one request line and returns one response line.
  std::string Exchange(const std::string& request,
                       std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    std::size_t written = 0;
    while (true) {
      if (auto pos = stdout_buffer_.find('\n'); pos != std::string::npos) {
        std::string line = stdout_buffer_.substr(0, pos);
        stdout_buffer_.erase(0, pos + 1);
        return line;
      }
      const auto now = Clock::now();
      if (now >= deadline) {
        Fail(ErrorCode::kAdapter,
             "external model timed out after " +
                 std::to_string(timeout.count()) + " ms" + Diagnostics());
      }
      pollfd fds[3];
      nfds_t count = 0;
      fds[count++] = {stdout_, POLLIN, 0};
      if (stderr_ >= 0) fds[count++] = {stderr_, POLLIN, 0};
      const bool writing = written < request.size() && stdin_ >= 0;
      if (writing) fds[count++] = {stdin_, POLLOUT, 0};
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      const int ready = ::poll(fds, count, static_cast<int>(remaining.count()) + 1);
      if (ready < 0) {
        if (errno == EINTR) continue;
        Fail(ErrorCode::kAdapter, "poll failed" + Diagnostics());
      }
      for (nfds_t i = 0; i < count; ++i) {
        if (fds[i].revents == 0) continue;
        if (fds[i].fd == stdin_) {
          const ssize_t n = ::write(stdin_, request.data() + written,
                                    request.size() - written);
          if (n > 0) {
            written += static_cast<std::size_t>(n);
          } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
            Fail(ErrorCode::kAdapter,
                 "external model closed its input" + Diagnostics());
          }
        } else if (fds[i].fd == stderr_) {
          if (!Drain(stderr_, stderr_tail_, true)) CloseFd(stderr_);
        } else if (fds[i].fd == stdout_) {
          if (!Drain(stdout_, stdout_buffer_, false) &&
              stdout_buffer_.find('\n') == std::string::npos) {
            Fail(ErrorCode::kAdapter,
                 "external model exited before answering" + Diagnostics());
          }
        }
      }
    }
  }

  std::string Diagnostics() {
    if (stderr_ >= 0) Drain(stderr_, stderr_tail_, true);
    std::string out;
    int status = 0;
    if (!reaped_ && ::waitpid(pid_, &status, WNOHANG) == pid_) {
      reaped_ = true;
      exit_note_ = DescribeWaitStatus(status);
    }
    if (!exit_note_.empty()) out += " (" + exit_note_ + ")";
    if (!stderr_tail_.empty()) out += "; child stderr: " + stderr_tail_;
    return out;
  }

 private:
  // Reads what is available; false on EOF.
  bool Drain(int fd, std::string& sink, bool bounded) {
    char buf[8192];
    while (true) {
      const ssize_t n = ::read(fd, buf, sizeof(buf));
      if (n > 0) {
        sink.append(buf, static_cast<std::size_t>(n));
        if (bounded && sink.size() > kStderrTail) {
          sink.erase(0, sink.size() - kStderrTail);
        }
        continue;
      }
      if (n == 0) return false;
      if (errno == EINTR) continue;
      return true;  // EAGAIN
    }
  }

  static void CloseFd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  void CloseAll() {
    CloseFd(stdin_);
    CloseFd(stdout_);
    CloseFd(stderr_);
  }

  pid_t pid_ = -1;
  int stdin_ = -1;
  int stdout_ = -1;
  int stderr_ = -1;
  bool reaped_ = false;
  std::string exit_note_;
  std::string stdout_buffer_;
  std::string stderr_tail_;
};

ExternalModel::ExternalModel(std::string command,
                             std::shared_ptr<const Schema> schema, Task task,
                             ExternalModelOptions options)
    : Predictor(std::move(schema), std::move(task)),
      command_(std::move(command)),
      options_(options) {
  if (command_.empty()) {
    Fail(ErrorCode::kInvalidArgument, "external model command is empty");
  }
  IgnoreSigpipeOnce();
  child_ = std::make_unique<Child>(command_);
}

ExternalModel::~ExternalModel() = default;

std::string ExternalModel::Describe() const {
  return "external(" + command_ + ")";
}

Predictions ExternalModel::PredictRows(const FeatureMatrix& rows) const {
  const std::size_t width = task().output_width();
  if (rows.rows() == 0) return Predictions(0, width);

  json payload_rows = json::array();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    json row = json::array();
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      const FeatureInfo& info = schema()[j];
      if (info.kind == FeatureKind::kNumeric) {
        row.push_back(rows(r, j));
      } else {
        row.push_back(info.levels[static_cast<std::size_t>(rows(r, j))]);
      }
    }
    payload_rows.push_back(std::move(row));
  }

  std::lock_guard<std::mutex> lock(mutex_);
  const std::int64_t id = next_id_++;
  json request = {{"id", id}, {"rows", std::move(payload_rows)}};
  const std::string line = request.dump() + "\n";

  if (!child_) child_ = std::make_unique<Child>(command_);
  try {
    const std::string reply = child_->Exchange(line, options_.timeout);
    json response;
    try {
      response = json::parse(reply);
    } catch (const json::exception&) {
      Fail(ErrorCode::kAdapter, "malformed response line from external model: '" +
                                    reply.substr(0, 200) + "'" +
                                    child_->Diagnostics());
    }
    if (!response.is_object() || !response.contains("id") ||
        !response["id"].is_number_integer() ||
        response["id"].get<std::int64_t>() != id) {
      Fail(ErrorCode::kAdapter, "response id does not echo request id " +
                                    std::to_string(id));
    }
    const auto it = response.find("predictions");
    if (it == response.end() || !it->is_array()) {
      Fail(ErrorCode::kAdapter, "response has no \"predictions\" array");
    }
    if (it->size() != rows.rows()) {
      Fail(ErrorCode::kAdapter,
           "external model returned " + std::to_string(it->size()) +
               " predictions, expected " + std::to_string(rows.rows()));
    }
    Predictions out(rows.rows(), width);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const json& item = (*it)[r];
      if (task().is_classification()) {
        if (!item.is_array() || item.size() != width) {
          Fail(ErrorCode::kAdapter, "prediction " + std::to_string(r) +
                                        " is not a probability row of width " +
                                        std::to_string(width));
        }
        for (std::size_t c = 0; c < width; ++c) {
          if (!item[c].is_number()) {
            Fail(ErrorCode::kAdapter, "non-numeric probability in prediction " +
                                          std::to_string(r));
          }
          out(r, c) = item[c].get<double>();
        }
      } else {
        if (!item.is_number()) {
          Fail(ErrorCode::kAdapter,
               "prediction " + std::to_string(r) + " is not a number");
        }
        out(r, 0) = item.get<double>();
      }
    }
    return out;
  } catch (const Error&) {
    child_.reset();
    throw;
  }
}

}  // namespace acme
