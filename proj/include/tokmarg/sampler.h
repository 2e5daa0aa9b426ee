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

#ifndef TOKMARG_SAMPLER_H_
#define TOKMARG_SAMPLER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tokmarg/lattice.h"
#include "tokmarg/vocab.h"

namespace tokmarg {

enum class SampleMode {
  kWithReplacement,
  kWithoutReplacement,
  kWithoutReplacementBest,
};

std::string_view SampleModeName(SampleMode mode);

struct Sample {
  Tokenisation tokenisation;
  // Perturbed log Q(T|D) found by the search (WOR modes only).
  std::optional<double> gumbel_key;
};

struct SampleSet {
  std::vector<Sample> samples;
  SampleMode mode = SampleMode::kWithReplacement;
  // Threshold for inclusion probabilities. Absent for WR and for exhausted
  // lattices.
  std::optional<double> kappa;
  // samples[0] is the one-best path (kWithoutReplacementBest only).
  bool contains_best = false;
  // The lattice had too few paths to fill the request; every path is present.
  bool exhausted = false;
  uint64_t seed = 0;
  double temperature = 1.0;
};

// k i.i.d. draws from Q(T|D) by ancestral sampling right to left: at node i
// the incoming edge j->i is chosen with probability
// exp(alpha[j] + score - alpha[i]).
SampleSet SampleWithReplacement(const Lattice& lattice, int k, uint64_t seed);

// The k paths with the largest Gumbel-perturbed log Q(T|D), found by
// stochastic beam search over the locally normalized lattice. The search
// always runs to k + 2 completed paths so either threshold rule can be
// applied; kappa is the key of path k + 1.
SampleSet SampleWithoutReplacement(const Lattice& lattice, int k,
                                   uint64_t seed);

// The one-best path followed by k distinct other paths, which are exact
// without-replacement draws from Q restricted to T != T*. From the top k + 1
// perturbed paths, T* is dropped if present (kappa = key of path k + 2),
// otherwise path k + 1 is dropped (kappa = its key).
SampleSet SampleWithoutReplacementBest(const Lattice& lattice, int k,
                                       uint64_t seed);

SampleSet DrawSamples(const Lattice& lattice, SampleMode mode, int k,
                      uint64_t seed);

// Proposal that tokenises every whitespace type once and reuses that
// tokenisation at each occurrence. `lattice` is built over the unique types
// in order of first occurrence; Expand() maps one of its paths back to a
// tokenisation of the whole document with unchanged scores.
class ConsistentProposal {
 public:
  // Throws kUncoverable like Lattice::Build.
  static ConsistentProposal Build(std::u32string_view document,
                                  const Vocab& vocab, double temperature = 1.0);
  static ConsistentProposal Build(std::string_view utf8_document,
                                  const Vocab& vocab, double temperature = 1.0);

  const Lattice& lattice() const { return lattice_; }
  size_t num_types() const { return type_spans_.size(); }
  // For each document word, the index of its type.
  const std::vector<int32_t>& word_types() const { return word_types_; }

  Tokenisation Expand(const Tokenisation& type_tokenisation) const;

 private:
  ConsistentProposal(Lattice lattice) : lattice_(std::move(lattice)) {}

  Lattice lattice_;
  std::vector<CharRange> type_spans_;  // offsets in the joined type text
  std::vector<CharRange> doc_words_;
  std::vector<int32_t> word_types_;
};

}  // namespace tokmarg

#endif  // TOKMARG_SAMPLER_H_
