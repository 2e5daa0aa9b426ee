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

#include "tokmarg/error.h"

namespace tokmarg {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kDuplicateToken: return "DuplicateToken";
    case ErrorKind::kNonFiniteScore: return "NonFiniteScore";
    case ErrorKind::kUncoverable: return "Uncoverable";
    case ErrorKind::kNotAPath: return "NotAPath";
    case ErrorKind::kModeMismatch: return "ModeMismatch";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kUnknownToken: return "UnknownToken";
    case ErrorKind::kTimeout: return "Timeout";
    case ErrorKind::kProtocolError: return "ProtocolError";
    case ErrorKind::kScorerCrashed: return "ScorerCrashed";
    case ErrorKind::kDegenerateInput: return "DegenerateInput";
    case ErrorKind::kTooManyPaths: return "TooManyPaths";
  }
  return "Unknown";
}

}  // namespace tokmarg
