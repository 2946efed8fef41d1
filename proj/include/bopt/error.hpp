/*
 * Copyright 2026 The bopt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace bopt {

enum class ErrorCode {
  InvalidArgument,
  Conditioning,      // Cholesky failed after jitter escalation
  InvalidObjective,  // objective returned NaN
  NotFound,
  WrongMode,         // scalar-only call on a preference session or vice versa
  Conflict,
  Io,
  Parse,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. `field()` carries a dotted/indexed path such as
/// "bounds[1]" when the error comes from config validation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

[[noreturn]] inline void throw_invalid(const std::string& message, std::string field = {}) {
  throw Error(ErrorCode::InvalidArgument, message, std::move(field));
}

}  // namespace bopt
