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

// Internal helpers for hand-assembled JSON lines: fixed key order and
// 17-significant-digit doubles, so output is byte-stable and round-trips.

#pragma once

#include <string>
#include <string_view>

#include <fmt/format.h>

#include "json.hpp"

namespace cop::detail {

inline std::string json_number(double v) { return fmt::format("{:.17g}", v); }

inline std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

// Builds one JSON object with keys in insertion order.
class ObjectWriter {
 public:
  ObjectWriter& raw(std::string_view key, std::string_view json_value) {
    out_ += first_ ? "{" : ",";
    first_ = false;
    out_ += json_string(key);
    out_ += ':';
    out_ += json_value;
    return *this;
  }
  ObjectWriter& str(std::string_view key, std::string_view v) { return raw(key, json_string(v)); }
  ObjectWriter& num(std::string_view key, double v) { return raw(key, json_number(v)); }
  ObjectWriter& integer(std::string_view key, long long v) { return raw(key, std::to_string(v)); }
  ObjectWriter& boolean(std::string_view key, bool v) { return raw(key, v ? "true" : "false"); }

  std::string done() const { return first_ ? "{}" : out_ + "}"; }

 private:
  std::string out_;
  bool first_ = true;
};

}  // namespace cop::detail
