// Copyright 2026 The tokmarg Authors.
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

#ifndef TOKMARG_ERROR_H_
#define TOKMARG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokmarg {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kMalformedLine,
  kDuplicateToken,
  kNonFiniteScore,
  kUncoverable,
  kNotAPath,
  kModeMismatch,
  kEmptyCorpus,
  kUnknownToken,
  kTimeout,
  kProtocolError,
  kScorerCrashed,
  kDegenerateInput,
  kTooManyPaths,
};

std::string_view ErrorKindName(ErrorKind kind);

// The single exception type thrown by the library. `kind()` identifies the
// failure; the message carries the offending line, token or position.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tokmarg

#endif  // TOKMARG_ERROR_H_
