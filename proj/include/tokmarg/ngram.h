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

#ifndef TOKMARG_NGRAM_H_
#define TOKMARG_NGRAM_H_

#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tokmarg/scorer.h"
#include "tokmarg/vocab.h"

namespace tokmarg {

// Interpolated absolute-discounting token n-gram model.
//
//   P_n(t | h) = max(c(h t) - d, 0) / c(h) + d N1+(h .) / c(h) P_{n-1}(t | h')
//
// with h' the context minus its oldest token, P_0 uniform over the outcomes
// (vocabulary tokens plus EOS), and contexts never seen in training falling
// straight through to the lower order. BOS pads the history and is never
// predicted. Immutable after training.
class NGramModel {
 public:
  // Throws kEmptyCorpus, kInvalidArgument (order < 1, discount outside
  // (0, 1), token id out of range).
  static NGramModel Train(const Vocab& vocab,
                          std::span<const std::vector<TokenId>> corpus,
                          int order, double discount);

  int order() const { return order_; }
  double discount() const { return discount_; }
  size_t vocab_size() const { return pieces_.size(); }
  TokenId eos() const { return static_cast<TokenId>(pieces_.size()); }
  TokenId bos() const { return eos() + 1; }
  size_t num_outcomes() const { return pieces_.size() + 1; }

  // Throws kUnknownToken.
  TokenId Lookup(std::string_view piece) const;
  const std::string& piece(TokenId id) const { return pieces_[id]; }

  // `history` is every token before the prediction, oldest first; it is
  // padded with BOS on the left as needed.
  double Prob(std::span<const TokenId> history, TokenId next) const;
  double LogProb(std::span<const TokenId> history, TokenId next) const {
    return std::log(Prob(history, next));
  }

  TokenScores Score(std::span<const TokenId> tokens) const;

  void Save(std::ostream& out) const;
  static NGramModel Load(std::istream& in);
  void SaveFile(const std::string& path) const;
  static NGramModel LoadFile(const std::string& path);

 private:
  struct ContextStats {
    int64_t total = 0;
    std::unordered_map<TokenId, int64_t> next;
  };
  struct ContextHash {
    size_t operator()(const std::vector<TokenId>& key) const;
  };
  using ContextTable =
      std::unordered_map<std::vector<TokenId>, ContextStats, ContextHash>;

  NGramModel() = default;
  double Interpolate(std::span<const TokenId> padded, size_t end, int n,
                     TokenId next) const;

  int order_ = 1;
  double discount_ = 0.5;
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> piece_ids_;
  // tables_[n - 1] holds the contexts of length n - 1.
  std::vector<ContextTable> tables_;
};

// Scorer backed by an NGramModel. With cache_lambda > 0 each prediction is
// mixed with a unigram cache over the tokens already seen in the sequence:
//   (1 - lambda) P_ngram + lambda count(t in history) / |history|.
class NGramScorer : public Scorer {
 public:
  explicit NGramScorer(std::shared_ptr<const NGramModel> model,
                       double cache_lambda = 0.0);

  // Throws kUnknownToken.
  TokenScores Score(std::span<const std::string> tokens) const;
  TokenScores ScoreIds(std::span<const TokenId> tokens) const;

  std::vector<TokenScores> ScoreBatch(
      std::span<const std::vector<std::string>> batch) override;
  bool concurrent() const override { return true; }

  const NGramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const NGramModel> model_;
  double cache_lambda_;
};

}  // namespace tokmarg

#endif  // TOKMARG_NGRAM_H_
