// Copyright 2026 The whiteprior Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace whiteprior {

enum class ErrorCode {
  kFileNotFound,
  kMalformedHeader,
  kPixelCountMismatch,
  kOutOfRange,
  kUnwritablePath,
  kDimensionMismatch,
  kInvalidArgument,
  kNonFinite,
  kDegenerate,
  kConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "file not found";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kPixelCountMismatch: return "pixel count mismatch";
    case ErrorCode::kOutOfRange: return "value out of range";
    case ErrorCode::kUnwritablePath: return "unwritable path";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kDegenerate: return "degenerate input";
    case ErrorCode::kConfig: return "invalid configuration";
  }
  return "unknown error";
}

/// Every failure in the library is reported through this type; `code()` lets
/// callers distinguish the cases without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace whiteprior
