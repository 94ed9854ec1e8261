/*
 * Copyright 2026 The quadscreen Authors.
 *
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quadscreen {

enum class ErrorCode {
  kInvalidArgument,
  kIndexOutOfRange,
  kInvalidDistribution,
  kInfeasible,
  kBudgetExceeded,
  kHypothesisViolated,
  kUndecidable,
  kParse,
  kSchema,
  kNumeric,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kInvalidDistribution: return "invalid_distribution";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kHypothesisViolated: return "hypothesis_violated";
    case ErrorCode::kUndecidable: return "undecidable";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// Every failure in the library is reported through this type. `location`
// names where the problem is (a file:line, a JSON path, a variable index)
// and is empty when there is nothing more specific to say.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string location = {})
      : std::runtime_error(compose(code, message, location)),
        code_(code),
        message_(message),
        location_(std::move(location)) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix and location suffix.
  const std::string& message() const noexcept { return message_; }
  const std::string& location() const noexcept { return location_; }

  // True for problems with input data rather than with how the API was
  // called. The CLI maps these to a distinct exit status.
  bool is_data_error() const noexcept {
    switch (code_) {
      case ErrorCode::kParse:
      case ErrorCode::kSchema:
      case ErrorCode::kIo:
      case ErrorCode::kInvalidDistribution:
      case ErrorCode::kIndexOutOfRange:
        return true;
      default:
        return false;
    }
  }

 private:
  static std::string compose(ErrorCode code, const std::string& message,
                             const std::string& location) {
    std::string out(to_string(code));
    out += ": ";
    out += message;
    if (!location.empty()) {
      out += " (at ";
      out += location;
      out += ")";
    }
    return out;
  }

  ErrorCode code_;
  std::string message_;
  std::string location_;
};

}  // namespace quadscreen
