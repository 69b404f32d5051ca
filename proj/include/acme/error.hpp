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

#ifndef ACME_ERROR_HPP_
#define ACME_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace acme {

// Error categories. Values mirror acme_status in acme.h.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kDomain = 4,
  kShape = 5,
  kKind = 6,
  kTask = 7,
  kSingular = 8,
  kAdapter = 9,
  kNotFound = 10,
  kInternal = 99,
};

// All library failures are reported as acme::Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace acme

#endif  // ACME_ERROR_HPP_
