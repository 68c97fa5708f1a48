/* Copyright 2026 The soupkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soupkit {

enum class ErrorKind {
  kMalformedFile,
  kIoError,
  kSchemaMismatch,
  kEmptyPool,
  kEmptyList,
  kLengthMismatch,
  kDimensionMismatch,
  kShapeMismatch,
  kNotOnSimplex,
  kTooFewModels,
  kAsymmetricInput,
  kDimensionTooLarge,
  kDegenerateDistances,
  kIndexOutOfRange,
  kInvalidArgument,
  kEvaluatorFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedFile: return "MalformedFile";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kSchemaMismatch: return "SchemaMismatch";
    case ErrorKind::kEmptyPool: return "EmptyPool";
    case ErrorKind::kEmptyList: return "EmptyList";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNotOnSimplex: return "NotOnSimplex";
    case ErrorKind::kTooFewModels: return "TooFewModels";
    case ErrorKind::kAsymmetricInput: return "AsymmetricInput";
    case ErrorKind::kDimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::kDegenerateDistances: return "DegenerateD";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEvaluatorFailure: return "EvaluatorFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so that callers (the
/// CLI in particular) can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Faults in the caller's inputs, as opposed to bugs or evaluator crashes.
  bool is_input_error() const noexcept {
    return kind_ != ErrorKind::kEvaluatorFailure;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace soupkit
