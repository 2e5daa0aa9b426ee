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

#include "tokmarg/vocab.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "tokmarg/error.h"
#include "tokmarg/utf8.h"

namespace tokmarg {

TokenId Vocab::Add(std::string_view piece, double score) {
  if (piece.empty()) {
    throw Error(ErrorKind::kMalformedLine, "empty token");
  }
  if (!std::isfinite(score)) {
    throw Error(ErrorKind::kNonFiniteScore, std::string(piece));
  }
  std::u32string chars = DecodeUtf8(piece);
  if (index_.count(chars) > 0) {
    throw Error(ErrorKind::kDuplicateToken, std::string(piece));
  }
  const auto id = static_cast<TokenId>(pieces_.size());
  if (chars.front() == boundary_marker_) ++num_marked_;
  max_piece_chars_ = std::max(max_piece_chars_, chars.size());
  index_.emplace(chars, id);
  pieces_.emplace_back(piece);
  chars_.push_back(std::move(chars));
  scores_.push_back(score);
  return id;
}

std::optional<TokenId> Vocab::Find(std::string_view piece) const {
  return Find(DecodeUtf8(piece));
}

std::optional<TokenId> Vocab::Find(std::u32string_view chars) const {
  auto it = index_.find(std::u32string(chars));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::u32string Vocab::MatchForm(std::u32string_view word) const {
  std::u32string form;
  form.reserve(word.size() + 1);
  if (is_marked()) form.push_back(boundary_marker_);
  form.append(word);
  return form;
}

Vocab LoadVocab(std::istream& in, char32_t boundary_marker) {
  Vocab vocab(boundary_marker);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos ||
        tab == 0) {
      throw Error(ErrorKind::kMalformedLine, "line " + std::to_string(line_no));
    }
    const std::string_view token(line.data(), tab);
    const std::string_view field(line.data() + tab + 1, line.size() - tab - 1);
    double score = 0.0;
    const auto [end, ec] =
        std::from_chars(field.data(), field.data() + field.size(), score);
    if (ec != std::errc() || end != field.data() + field.size()) {
      throw Error(ErrorKind::kMalformedLine, "line " + std::to_string(line_no));
    }
    if (!std::isfinite(score)) {
      throw Error(ErrorKind::kNonFiniteScore, std::string(token));
    }
    try {
      vocab.Add(token, score);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInvalidArgument) {
        throw Error(ErrorKind::kMalformedLine,
                    "line " + std::to_string(line_no) + " (invalid UTF-8)");
      }
      throw;
    }
  }
  return vocab;
}

Vocab LoadVocabFile(const std::string& path, char32_t boundary_marker) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open vocab " + path);
  return LoadVocab(in, boundary_marker);
}

void DumpVocab(const Vocab& vocab, std::ostream& out) {
  const auto old_precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id) {
    out << vocab.piece(id) << '\t' << vocab.score(id) << '\n';
  }
  out.precision(old_precision);
}

std::vector<int32_t> CoverageCheck(const Vocab& vocab,
                                   std::u32string_view text) {
  std::vector<int32_t> blocked;
  const size_t max_len = vocab.max_piece_chars();
  for (const CharRange& word : WhitespaceWords(text)) {
    const std::u32string form =
        vocab.MatchForm(text.substr(word.begin, word.size()));
    const size_t n = form.size();
    const int32_t shift = vocab.is_marked() ? 1 : 0;

    std::vector<bool> spanned(n, false);
    std::vector<bool> reached(n + 1, false);
    reached[0] = true;
    for (size_t start = 0; start < n; ++start) {
      for (size_t len = 1; len <= max_len && start + len <= n; ++len) {
        if (!vocab.Find(std::u32string_view(form).substr(start, len))) continue;
        for (size_t p = start; p < start + len; ++p) spanned[p] = true;
        if (reached[start]) reached[start + len] = true;
      }
    }
    if (reached[n]) continue;

    // Form position p maps to document offset begin + p - shift; the marker
    // maps onto the word's first character.
    auto to_doc = [&](size_t p) {
      return word.begin + std::max<int32_t>(0, static_cast<int32_t>(p) - shift);
    };
    bool any = false;
    for (size_t p = 0; p < n; ++p) {
      if (!spanned[p]) {
        blocked.push_back(to_doc(p));
        any = true;
      }
    }
    if (!any) {
      size_t frontier = 0;
      for (size_t p = 0; p < n; ++p) {
        if (reached[p]) frontier = p;
      }
      blocked.push_back(to_doc(frontier));
    }
  }
  std::sort(blocked.begin(), blocked.end());
  blocked.erase(std::unique(blocked.begin(), blocked.end()), blocked.end());
  return blocked;
}

std::vector<int32_t> CoverageCheck(const Vocab& vocab,
                                   std::string_view utf8_text) {
  return CoverageCheck(vocab, std::u32string_view(DecodeUtf8(utf8_text)));
}

}  // namespace tokmarg
