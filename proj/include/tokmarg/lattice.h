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

#ifndef TOKMARG_LATTICE_H_
#define TOKMARG_LATTICE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokmarg/utf8.h"
#include "tokmarg/vocab.h"

namespace tokmarg {

// A token occurrence between two lattice nodes. `score` is the vocab score
// already divided by the lattice temperature.
struct LatticeEdge {
  int32_t from = 0;
  int32_t to = 0;
  TokenId token = 0;
  double score = 0.0;
  CharRange span;   // document offsets; empty for a bare boundary marker
  int32_t word = 0; // index into Lattice::word_spans()
};

// One path through a lattice, i.e. one tokenisation of the document.
struct Tokenisation {
  std::vector<TokenId> token_ids;
  std::vector<CharRange> spans;
  double log_q_joint = 0.0;  // sum of tempered edge scores
  double log_q_cond = 0.0;   // log_q_joint - log Q(D)

  size_t size() const { return token_ids.size(); }
  bool SamePath(const Tokenisation& other) const {
    return token_ids == other.token_ids && spans == other.spans;
  }
};

// Segmentation lattice of a document: the chain of per-word lattices, with
// no token crossing whitespace. Nodes are positions in the concatenation of
// the words' match forms (see Vocab::MatchForm). Immutable once built.
class Lattice {
 public:
  // Throws kInvalidArgument if temperature <= 0 and kUncoverable if some word
  // has no segmentation (the message lists the blocking positions).
  static Lattice Build(std::u32string_view text, const Vocab& vocab,
                       double temperature = 1.0);
  static Lattice Build(std::string_view utf8_text, const Vocab& vocab,
                       double temperature = 1.0);

  int32_t num_nodes() const { return static_cast<int32_t>(alpha_.size()); }
  int32_t final_node() const { return num_nodes() - 1; }
  double temperature() const { return temperature_; }
  int32_t text_length() const { return text_length_; }

  std::span<const LatticeEdge> edges() const { return edges_; }
  const LatticeEdge& edge(int32_t id) const { return edges_[id]; }
  // Edge ids ending (resp. starting) at `node`, ordered by the other endpoint.
  std::span<const int32_t> incoming(int32_t node) const;
  std::span<const int32_t> outgoing(int32_t node) const;

  std::span<const CharRange> word_spans() const { return word_spans_; }

  // Forward and backward log-marginals; alpha[final] == beta[0] == log Q(D).
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& beta() const { return beta_; }
  double log_normalizer() const { return alpha_.back(); }

  Tokenisation MakeTokenisation(std::span<const int32_t> edge_path) const;

  // Edge ids of `t`. Throws kNotAPath if `t` does not follow lattice edges
  // from the first node to the last.
  std::vector<int32_t> FindPath(const Tokenisation& t) const;

  // Debug dump: nodes, edges (start, end, token, score), alpha, beta.
  std::string ToJson(const Vocab& vocab) const;

 private:
  Lattice() = default;
  void Index();
  void RunForwardBackward();

  double temperature_ = 1.0;
  int32_t text_length_ = 0;
  std::vector<LatticeEdge> edges_;
  std::vector<CharRange> word_spans_;
  std::vector<int32_t> in_offsets_, in_edges_;
  std::vector<int32_t> out_offsets_, out_edges_;
  std::vector<double> alpha_, beta_;
};

struct PathScore {
  double log_q_joint = 0.0;
  double log_q_cond = 0.0;
};

// Throws kNotAPath.
PathScore ScoreTokenisation(const Lattice& lattice, const Tokenisation& t);

// The min(n, #paths) highest-scoring paths, best first. Equal scores are
// ordered by the lexicographic order of their end-node sequences, so the
// path whose first differing token ends earlier comes first.
std::vector<Tokenisation> ViterbiNBest(const Lattice& lattice, int n);
Tokenisation ViterbiBest(const Lattice& lattice);

// Shannon entropy (nats) of Q(T|D) over complete paths.
double LatticeEntropy(const Lattice& lattice);

// Joins token strings. For a marked vocabulary the marker becomes a space
// (the leading one is dropped); otherwise a space is inserted wherever the
// spans skip over whitespace.
std::string Detokenise(const Vocab& vocab, const Tokenisation& t);

}  // namespace tokmarg

#endif  // TOKMARG_LATTICE_H_
