// Copyright 2026 The specrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "specrelax/error.hpp"

namespace specrelax {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kZeroNormFeature: return "ZeroNormFeature";
    case ErrorKind::kDegenerateResidual: return "DegenerateResidual";
    case ErrorKind::kUnknownWindow: return "UnknownWindow";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kVocabExhausted: return "VocabExhausted";
    case ErrorKind::kNotAPath: return "NotAPath";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kRowOutOfRange: return "RowOutOfRange";
    case ErrorKind::kFormat: return "Format";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace specrelax
