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

#ifndef TOKMARG_ORACLE_H_
#define TOKMARG_ORACLE_H_

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "tokmarg/utf8.h"
#include "tokmarg/vocab.h"

// Brute-force reference computations over explicitly enumerated paths. Used
// as ground truth by the tests; deliberately independent of the lattice code
// and only suitable for short texts.
namespace tokmarg::oracle {

struct EnumeratedPath {
  std::vector<TokenId> token_ids;
  std::vector<CharRange> spans;
  double log_q_joint = 0.0;
  double log_q_cond = 0.0;
};

struct EnumeratedLattice {
  std::vector<EnumeratedPath> paths;
  double log_normalizer = 0.0;
};

inline constexpr size_t kDefaultMaxPaths = 1'000'000;

// Depth-first enumeration per word, then the cross product across words.
// Throws kTooManyPaths past `max_paths` and kUncoverable if some word has no
// segmentation.
EnumeratedLattice Enumerate(std::u32string_view text, const Vocab& vocab,
                            double temperature = 1.0,
                            size_t max_paths = kDefaultMaxPaths);
EnumeratedLattice Enumerate(std::string_view utf8_text, const Vocab& vocab,
                            double temperature = 1.0,
                            size_t max_paths = kDefaultMaxPaths);

using PathFunction = std::function<double(const EnumeratedPath&)>;

// log sum_T exp(log_p(T)).
double ExactMarginal(const EnumeratedLattice& lattice, const PathFunction& log_p);
// -sum_T Q(T|D) log Q(T|D).
double ExactEntropy(const EnumeratedLattice& lattice);
// sum_T Q(T|D) f(T).
double ExactExpectation(const EnumeratedLattice& lattice, const PathFunction& f);

// Paths sorted by descending joint score; scores equal to within `tie`
// are ordered by their span end offsets, lexicographically.
std::vector<EnumeratedPath> SortedPaths(const EnumeratedLattice& lattice,
                                        double tie = 1e-9);

}  // namespace tokmarg::oracle

#endif  // TOKMARG_ORACLE_H_
