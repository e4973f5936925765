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

#include "cop/error.hpp"

namespace cop {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMultiTokenLabel: return "MultiTokenLabel";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kPartialDistribution: return "PartialDistribution";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kScriptParseError: return "ScriptParseError";
    case ErrorCode::kScriptMiss: return "ScriptMiss";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingGold: return "MissingGold";
    case ErrorCode::kNoTrueAnswers: return "NoTrueAnswers";
    case ErrorCode::kTooFewItems: return "TooFewItems";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidAnswerLabel: return "InvalidAnswerLabel";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
  }
  return "Unknown";
}

}  // namespace cop
