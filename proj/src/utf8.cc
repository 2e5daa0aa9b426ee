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

#include "tokmarg/utf8.h"

#include "tokmarg/error.h"

namespace tokmarg {

std::u32string DecodeUtf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t c = 0;
    if (lead < 0x80) {
      c = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      c = lead & 0x1F;
      extra = 1;
    } else if ((lead & 0xF0) == 0xE0) {
      c = lead & 0x0F;
      extra = 2;
    } else if ((lead & 0xF8) == 0xF0) {
      c = lead & 0x07;
      extra = 3;
    } else {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + extra >= text.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        throw Error(ErrorKind::kInvalidArgument,
                    "invalid UTF-8 continuation at offset " +
                        std::to_string(i + k));
      }
      c = (c << 6) | (cont & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    static constexpr char32_t kMinForLength[] = {0, 0x80, 0x800, 0x10000};
    if (c < kMinForLength[extra] || c > 0x10FFFF ||
        (c >= 0xD800 && c <= 0xDFFF)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid code point at offset " + std::to_string(i));
    }
    out.push_back(c);
    i += extra + 1;
  }
  return out;
}

void AppendUtf8(char32_t c, std::string* out) {
  if (c < 0x80) {
    out->push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (c >> 6)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (c >> 12)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (c >> 18)));
    out->push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string EncodeUtf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) AppendUtf8(c, &out);
  return out;
}

bool IsUnicodeSpace(char32_t c) {
  switch (c) {
    case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
    case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

std::vector<CharRange> WhitespaceWords(std::u32string_view text) {
  std::vector<CharRange> words;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < n) {
    while (i < n && IsUnicodeSpace(text[i])) ++i;
    if (i == n) break;
    const int32_t begin = i;
    while (i < n && !IsUnicodeSpace(text[i])) ++i;
    words.push_back({begin, i});
  }
  return words;
}

size_t CountWhitespaceTokens(std::string_view utf8_text) {
  return WhitespaceWords(DecodeUtf8(utf8_text)).size();
}

}  // namespace tokmarg
