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

#ifndef TOKMARG_VOCAB_H_
#define TOKMARG_VOCAB_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokmarg {

using TokenId = int32_t;

// U+2581 LOWER ONE EIGHTH BLOCK, the SentencePiece word-boundary marker.
inline constexpr char32_t kDefaultBoundaryMarker = U'▁';

// Unigram lexicon: token strings with unnormalized natural-log scores.
//
// When any token begins with the boundary marker the vocabulary is "marked":
// every word is matched as marker + word, so only marker-prefixed tokens can
// start a word and only unmarked tokens can continue it. A vocabulary with no
// marked tokens matches words as they are.
//
// Immutable after construction; concurrent reads are safe.
class Vocab {
 public:
  explicit Vocab(char32_t boundary_marker = kDefaultBoundaryMarker)
      : boundary_marker_(boundary_marker) {}

  // Throws kMalformedLine for an empty piece, kDuplicateToken, or
  // kNonFiniteScore.
  TokenId Add(std::string_view piece, double score);

  size_t size() const { return pieces_.size(); }
  bool empty() const { return pieces_.empty(); }

  const std::string& piece(TokenId id) const { return pieces_[id]; }
  const std::u32string& piece_chars(TokenId id) const { return chars_[id]; }
  double score(TokenId id) const { return scores_[id]; }

  std::optional<TokenId> Find(std::string_view piece) const;
  std::optional<TokenId> Find(std::u32string_view chars) const;

  char32_t boundary_marker() const { return boundary_marker_; }
  bool is_marked() const { return num_marked_ > 0; }

  // Longest piece length in Unicode scalars.
  size_t max_piece_chars() const { return max_piece_chars_; }

  // The character sequence a word is matched against (marker + word for a
  // marked vocabulary).
  std::u32string MatchForm(std::u32string_view word) const;

 private:
  struct U32Hash {
    size_t operator()(const std::u32string& s) const {
      return std::hash<std::u32string>()(s);
    }
  };

  char32_t boundary_marker_;
  std::vector<std::string> pieces_;
  std::vector<std::u32string> chars_;
  std::vector<double> scores_;
  std::unordered_map<std::u32string, TokenId, U32Hash> index_;
  size_t num_marked_ = 0;
  size_t max_piece_chars_ = 0;
};

// Parses "token<TAB>score" lines. Errors: kMalformedLine (1-based line
// number in the message), kDuplicateToken, kNonFiniteScore.
Vocab LoadVocab(std::istream& in,
                char32_t boundary_marker = kDefaultBoundaryMarker);
Vocab LoadVocabFile(const std::string& path,
                    char32_t boundary_marker = kDefaultBoundaryMarker);

// Writes entries in id order, scores with round-trip precision.
void DumpVocab(const Vocab& vocab, std::ostream& out);

// Character positions of `text` that block segmentation. Empty iff every
// whitespace-delimited word admits at least one segmentation. For a word
// with no segmentation this reports the positions no matching token spans;
// if every position is spanned, the first position the forward search
// cannot get past is reported instead.
std::vector<int32_t> CoverageCheck(const Vocab& vocab,
                                   std::u32string_view text);
std::vector<int32_t> CoverageCheck(const Vocab& vocab,
                                   std::string_view utf8_text);

}  // namespace tokmarg

#endif  // TOKMARG_VOCAB_H_
