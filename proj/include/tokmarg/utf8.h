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

#ifndef TOKMARG_UTF8_H_
#define TOKMARG_UTF8_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tokmarg {

// Half-open range [begin, end) of Unicode scalar offsets into a document.
struct CharRange {
  int32_t begin = 0;
  int32_t end = 0;

  int32_t size() const { return end - begin; }
  friend bool operator==(const CharRange&, const CharRange&) = default;
};

// Throws Error(kInvalidArgument) on malformed UTF-8.
std::u32string DecodeUtf8(std::string_view text);
std::string EncodeUtf8(std::u32string_view text);
void AppendUtf8(char32_t c, std::string* out);

// White_Space property of the Unicode character database.
bool IsUnicodeSpace(char32_t c);

// Maximal runs of non-whitespace characters, in order.
std::vector<CharRange> WhitespaceWords(std::u32string_view text);

// Number of whitespace-delimited tokens. This is the perplexity denominator
// for every command.
size_t CountWhitespaceTokens(std::string_view utf8_text);

}  // namespace tokmarg

#endif  // TOKMARG_UTF8_H_
