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

#include "tokmarg/sampler.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "tokmarg/error.h"
#include "tokmarg/log_math.h"
#include "tokmarg/random.h"

namespace tokmarg {

std::string_view SampleModeName(SampleMode mode) {
  switch (mode) {
    case SampleMode::kWithReplacement: return "wr";
    case SampleMode::kWithoutReplacement: return "wor";
    case SampleMode::kWithoutReplacementBest: return "wor1best";
  }
  return "unknown";
}

namespace {

void CheckCount(int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "sample count must be >= 1");
}

// Gumbel with location `value`, conditioned on the maximum over its siblings
// (`max_value`) being equal to `bound`:
//   -log(exp(-bound) - exp(-max_value) + exp(-value)).
// Evaluated as bound - softplus(v) with
//   v = bound - value + log(1 - exp(value - max_value)),
// where softplus(v) = max(0, v) + log1p(exp(-|v|)).
double TruncatedGumbel(double bound, double value, double max_value) {
  const double v = bound - value + Log1mExp(value - max_value);
  return bound - std::max(0.0, v) - std::log1p(std::exp(-std::fabs(v)));
}

struct CompletedPath {
  std::vector<int32_t> edges;
  double key;
};

// Best-first stochastic beam search from the final node towards node 0.
// Each partial path (a suffix) carries the log of the Q(T|D) mass of all its
// completions and the maximum perturbed score among them. Children split the
// parent mass through the forward marginals, and their keys are Gumbels
// conditioned on their maximum equalling the parent key, so complete paths
// leave the agenda in decreasing order of perturbed log Q(T|D).
std::vector<CompletedPath> TopPerturbedPaths(const Lattice& lattice,
                                             size_t count, Rng& rng) {
  struct Partial {
    int32_t node;
    int32_t edge;
    int32_t parent;
    double log_mass;
    double key;
  };
  const auto& alpha = lattice.alpha();
  std::vector<Partial> arena;
  arena.push_back({lattice.final_node(), -1, -1, 0.0, rng.Gumbel()});

  auto lower = [&arena](int32_t a, int32_t b) {
    if (arena[a].key != arena[b].key) return arena[a].key < arena[b].key;
    return a > b;
  };
  std::priority_queue<int32_t, std::vector<int32_t>, decltype(lower)> agenda(
      lower);
  agenda.push(0);

  std::vector<CompletedPath> completed;
  std::vector<int32_t> child_edges;
  std::vector<double> child_mass;
  std::vector<double> perturbed;
  while (!agenda.empty() && completed.size() < count) {
    const int32_t top = agenda.top();
    agenda.pop();
    const Partial parent = arena[top];
    if (parent.node == 0) {
      CompletedPath path;
      for (int32_t h = top; arena[h].parent >= 0; h = arena[h].parent) {
        path.edges.push_back(arena[h].edge);
      }
      path.key = parent.key;
      completed.push_back(std::move(path));
      continue;
    }
    child_edges.clear();
    child_mass.clear();
    perturbed.clear();
    double max_perturbed = kNegInf;
    for (int32_t id : lattice.incoming(parent.node)) {
      const LatticeEdge& e = lattice.edge(id);
      if (alpha[e.from] == kNegInf) continue;
      const double mass =
          parent.log_mass + alpha[e.from] + e.score - alpha[parent.node];
      const double value = mass + rng.Gumbel();
      child_edges.push_back(id);
      child_mass.push_back(mass);
      perturbed.push_back(value);
      max_perturbed = std::max(max_perturbed, value);
    }
    for (size_t c = 0; c < child_edges.size(); ++c) {
      const double key = TruncatedGumbel(parent.key, perturbed[c], max_perturbed);
      arena.push_back({lattice.edge(child_edges[c]).from, child_edges[c], top,
                       child_mass[c], key});
      agenda.push(static_cast<int32_t>(arena.size() - 1));
    }
  }
  return completed;
}

Sample MakeSample(const Lattice& lattice, const CompletedPath& path) {
  return {lattice.MakeTokenisation(path.edges), path.key};
}

}  // namespace

SampleSet SampleWithReplacement(const Lattice& lattice, int k, uint64_t seed) {
  CheckCount(k);
  SampleSet set;
  set.mode = SampleMode::kWithReplacement;
  set.seed = seed;
  set.temperature = lattice.temperature();
  Rng rng(seed);
  const auto& alpha = lattice.alpha();
  std::vector<int32_t> path;
  for (int s = 0; s < k; ++s) {
    path.clear();
    int32_t node = lattice.final_node();
    while (node != 0) {
      const double u = rng.Uniform();
      double cumulative = 0.0;
      int32_t chosen = -1;
      for (int32_t id : lattice.incoming(node)) {
        const LatticeEdge& e = lattice.edge(id);
        if (alpha[e.from] == kNegInf) continue;
        chosen = id;
        cumulative += std::exp(alpha[e.from] + e.score - alpha[node]);
        if (u <= cumulative) break;
      }
      path.push_back(chosen);
      node = lattice.edge(chosen).from;
    }
    std::reverse(path.begin(), path.end());
    set.samples.push_back({lattice.MakeTokenisation(path), std::nullopt});
  }
  return set;
}

SampleSet SampleWithoutReplacement(const Lattice& lattice, int k,
                                   uint64_t seed) {
  CheckCount(k);
  Rng rng(seed);
  const auto top = TopPerturbedPaths(lattice, static_cast<size_t>(k) + 2, rng);
  SampleSet set;
  set.mode = SampleMode::kWithoutReplacement;
  set.seed = seed;
  set.temperature = lattice.temperature();
  const size_t keep = std::min(top.size(), static_cast<size_t>(k));
  for (size_t i = 0; i < keep; ++i) set.samples.push_back(MakeSample(lattice, top[i]));
  if (top.size() > static_cast<size_t>(k)) {
    set.kappa = top[k].key;
  } else {
    set.exhausted = true;
  }
  return set;
}

SampleSet SampleWithoutReplacementBest(const Lattice& lattice, int k,
                                       uint64_t seed) {
  CheckCount(k);
  Rng rng(seed);
  const Tokenisation best = ViterbiBest(lattice);
  const auto best_path = lattice.FindPath(best);
  const auto top = TopPerturbedPaths(lattice, static_cast<size_t>(k) + 2, rng);

  SampleSet set;
  set.mode = SampleMode::kWithoutReplacementBest;
  set.seed = seed;
  set.temperature = lattice.temperature();
  set.contains_best = true;
  set.samples.push_back({best, std::nullopt});

  const size_t window = std::min(top.size(), static_cast<size_t>(k) + 1);
  size_t best_index = window;
  for (size_t i = 0; i < window; ++i) {
    if (top[i].edges == best_path) {
      best_index = i;
      break;
    }
  }
  if (best_index < window) {
    for (size_t i = 0; i < window; ++i) {
      if (i != best_index) set.samples.push_back(MakeSample(lattice, top[i]));
    }
    if (top.size() > static_cast<size_t>(k) + 1) {
      set.kappa = top[k + 1].key;
    } else {
      set.exhausted = true;
    }
  } else {
    // T* is not among the top k + 1, so at least k + 2 paths exist.
    for (int i = 0; i < k; ++i) set.samples.push_back(MakeSample(lattice, top[i]));
    set.kappa = top[k].key;
  }
  return set;
}

SampleSet DrawSamples(const Lattice& lattice, SampleMode mode, int k,
                      uint64_t seed) {
  switch (mode) {
    case SampleMode::kWithReplacement:
      return SampleWithReplacement(lattice, k, seed);
    case SampleMode::kWithoutReplacement:
      return SampleWithoutReplacement(lattice, k, seed);
    case SampleMode::kWithoutReplacementBest:
      return SampleWithoutReplacementBest(lattice, k, seed);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown sample mode");
}

ConsistentProposal ConsistentProposal::Build(std::string_view utf8_document,
                                             const Vocab& vocab,
                                             double temperature) {
  const std::u32string doc = DecodeUtf8(utf8_document);
  return Build(std::u32string_view(doc), vocab, temperature);
}

ConsistentProposal ConsistentProposal::Build(std::u32string_view document,
                                             const Vocab& vocab,
                                             double temperature) {
  const std::vector<CharRange> words = WhitespaceWords(document);
  std::unordered_map<std::u32string, int32_t> type_ids;
  std::u32string joined;
  std::vector<CharRange> type_spans;
  std::vector<int32_t> word_types;
  word_types.reserve(words.size());
  for (const CharRange& w : words) {
    std::u32string word(document.substr(w.begin, w.size()));
    auto [it, inserted] =
        type_ids.emplace(word, static_cast<int32_t>(type_spans.size()));
    if (inserted) {
      if (!joined.empty()) joined.push_back(U' ');
      const auto begin = static_cast<int32_t>(joined.size());
      joined += word;
      type_spans.push_back({begin, static_cast<int32_t>(joined.size())});
    }
    word_types.push_back(it->second);
  }
  ConsistentProposal proposal(Lattice::Build(std::u32string_view(joined), vocab, temperature));
  proposal.type_spans_ = std::move(type_spans);
  proposal.doc_words_ = words;
  proposal.word_types_ = std::move(word_types);
  return proposal;
}

Tokenisation ConsistentProposal::Expand(
    const Tokenisation& type_tokenisation) const {
  const int32_t length = lattice_.text_length();
  std::vector<int32_t> type_at(length, -1);
  for (size_t m = 0; m < type_spans_.size(); ++m) {
    for (int32_t p = type_spans_[m].begin; p < type_spans_[m].end; ++p) {
      type_at[p] = static_cast<int32_t>(m);
    }
  }
  struct Piece {
    TokenId token;
    CharRange offset;  // relative to the start of the type
  };
  std::vector<std::vector<Piece>> per_type(type_spans_.size());
  for (size_t i = 0; i < type_tokenisation.size(); ++i) {
    const CharRange span = type_tokenisation.spans[i];
    if (span.begin < 0 || span.begin >= length || type_at[span.begin] < 0) {
      throw Error(ErrorKind::kNotAPath, "token outside the type lattice");
    }
    const int32_t m = type_at[span.begin];
    const int32_t origin = type_spans_[m].begin;
    per_type[m].push_back(
        {type_tokenisation.token_ids[i], {span.begin - origin, span.end - origin}});
  }

  Tokenisation expanded;
  for (size_t w = 0; w < doc_words_.size(); ++w) {
    for (const Piece& piece : per_type[word_types_[w]]) {
      expanded.token_ids.push_back(piece.token);
      expanded.spans.push_back({doc_words_[w].begin + piece.offset.begin,
                                doc_words_[w].begin + piece.offset.end});
    }
  }
  expanded.log_q_joint = type_tokenisation.log_q_joint;
  expanded.log_q_cond = type_tokenisation.log_q_cond;
  return expanded;
}

}  // namespace tokmarg
