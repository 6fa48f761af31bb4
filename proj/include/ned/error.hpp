// Copyright 2026 The ned-entrain Authors.
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
#include <string_view>

namespace ned {

enum class ErrorKind {
  kMissingFile,
  kSchemaViolation,
  kDimensionMismatch,
  kShapeMismatch,
  kEmptyResult,
  kInsufficientUnits,
  kEmptyFrames,
  kStaleCache,
  kEmptyPairSet,
  kZeroVector,
  kTooFewSessions,
  kInvalidSpec,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind);

// All library failures are reported through this exception; `kind()` lets
// callers (and tests) distinguish the failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyResult: return "EmptyResult";
    case ErrorKind::kInsufficientUnits: return "InsufficientUnits";
    case ErrorKind::kEmptyFrames: return "EmptyFrames";
    case ErrorKind::kStaleCache: return "StaleCache";
    case ErrorKind::kEmptyPairSet: return "EmptyPairSet";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kTooFewSessions: return "TooFewSessions";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace ned
