// Copyright 2026 The cotprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace cop {

// Numeric values are part of the C ABI (see cotprobe/cotprobe.h); append only.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kMultiTokenLabel = 2,
  kUnknownToken = 3,
  kBackendUnavailable = 4,
  kPartialDistribution = 5,
  kBudgetExceeded = 6,
  kScriptParseError = 7,
  kScriptMiss = 8,
  kProtocolError = 9,
  kEmptyInput = 10,
  kMissingGold = 11,
  kNoTrueAnswers = 12,
  kTooFewItems = 13,
  kDegenerateInput = 14,
  kSingleClass = 15,
  kTooFewSamples = 16,
  kParseError = 17,
  kDuplicateId = 18,
  kInvalidAnswerLabel = 19,
  kIoError = 20,
  kVersionMismatch = 21,
  kHeaderMismatch = 22,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures that carry a 1-based line number.
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line, const std::string& what)
      : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cop
