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

#include "tokmarg/oracle.h"

#include <algorithm>
#include <cmath>

#include "tokmarg/error.h"

namespace tokmarg::oracle {

namespace {

struct Piece {
  TokenId token;
  CharRange span;
};

void Segment(const std::u32string& form, size_t pos, const Vocab& vocab,
             std::vector<Piece>& prefix, int32_t word_begin, int32_t shift,
             std::vector<std::vector<Piece>>& out, size_t max_paths) {
  if (pos == form.size()) {
    if (out.size() >= max_paths) {
      throw Error(ErrorKind::kTooManyPaths, "more than " + std::to_string(max_paths));
    }
    out.push_back(prefix);
    return;
  }
  for (size_t end = pos + 1; end <= form.size(); ++end) {
    const auto id = vocab.Find(std::u32string_view(form).substr(pos, end - pos));
    if (!id) continue;
    auto doc = [&](size_t p) {
      return word_begin + std::max<int32_t>(0, static_cast<int32_t>(p) - shift);
    };
    prefix.push_back({*id, {doc(pos), doc(end)}});
    Segment(form, end, vocab, prefix, word_begin, shift, out, max_paths);
    prefix.pop_back();
  }
}

}  // namespace

EnumeratedLattice Enumerate(std::string_view utf8_text, const Vocab& vocab,
                            double temperature, size_t max_paths) {
  const std::u32string text = DecodeUtf8(utf8_text);
  return Enumerate(std::u32string_view(text), vocab, temperature, max_paths);
}

EnumeratedLattice Enumerate(std::u32string_view text, const Vocab& vocab,
                            double temperature, size_t max_paths) {
  // Words are maximal non-space runs.
  std::vector<CharRange> words;
  for (int32_t i = 0; i < static_cast<int32_t>(text.size());) {
    if (IsUnicodeSpace(text[i])) {
      ++i;
      continue;
    }
    int32_t j = i;
    while (j < static_cast<int32_t>(text.size()) && !IsUnicodeSpace(text[j])) ++j;
    words.push_back({i, j});
    i = j;
  }

  const int32_t shift = vocab.is_marked() ? 1 : 0;
  std::vector<std::vector<std::vector<Piece>>> per_word;
  size_t total = 1;
  for (const CharRange& w : words) {
    std::u32string form;
    if (vocab.is_marked()) form.push_back(vocab.boundary_marker());
    form.append(text.substr(w.begin, w.end - w.begin));
    std::vector<std::vector<Piece>> segmentations;
    std::vector<Piece> prefix;
    Segment(form, 0, vocab, prefix, w.begin, shift, segmentations, max_paths);
    if (segmentations.empty()) {
      throw Error(ErrorKind::kUncoverable, "word at " + std::to_string(w.begin));
    }
    total *= segmentations.size();
    if (total > max_paths) {
      throw Error(ErrorKind::kTooManyPaths, "more than " + std::to_string(max_paths));
    }
    per_word.push_back(std::move(segmentations));
  }

  EnumeratedLattice result;
  std::vector<size_t> choice(per_word.size(), 0);
  while (true) {
    EnumeratedPath path;
    for (size_t w = 0; w < per_word.size(); ++w) {
      for (const Piece& p : per_word[w][choice[w]]) {
        path.token_ids.push_back(p.token);
        path.spans.push_back(p.span);
      }
    }
    double joint = 0.0;
    for (TokenId id : path.token_ids) joint += vocab.score(id) / temperature;
    path.log_q_joint = joint;
    result.paths.push_back(std::move(path));

    size_t w = per_word.size();
    while (w > 0) {
      --w;
      if (++choice[w] < per_word[w].size()) break;
      choice[w] = 0;
      if (w == 0) {
        w = per_word.size() + 1;
        break;
      }
    }
    if (per_word.empty() || w == per_word.size() + 1) break;
  }

  long double hi = -INFINITY;
  for (const auto& p : result.paths) hi = std::max<long double>(hi, p.log_q_joint);
  long double sum = 0.0L;
  for (const auto& p : result.paths) sum += std::exp(static_cast<long double>(p.log_q_joint) - hi);
  result.log_normalizer = static_cast<double>(hi + std::log(sum));
  for (auto& p : result.paths) p.log_q_cond = p.log_q_joint - result.log_normalizer;
  return result;
}

double ExactMarginal(const EnumeratedLattice& lattice, const PathFunction& log_p) {
  std::vector<long double> values;
  long double hi = -INFINITY;
  for (const auto& p : lattice.paths) {
    values.push_back(log_p(p));
    hi = std::max(hi, values.back());
  }
  if (hi == -INFINITY) return -INFINITY;
  long double sum = 0.0L;
  for (long double v : values) sum += std::exp(v - hi);
  return static_cast<double>(hi + std::log(sum));
}

double ExactEntropy(const EnumeratedLattice& lattice) {
  long double h = 0.0L;
  for (const auto& p : lattice.paths) {
    const long double log_q = p.log_q_cond;
    h -= std::exp(log_q) * log_q;
  }
  return static_cast<double>(h);
}

double ExactExpectation(const EnumeratedLattice& lattice, const PathFunction& f) {
  long double sum = 0.0L;
  for (const auto& p : lattice.paths) {
    sum += std::exp(static_cast<long double>(p.log_q_cond)) * f(p);
  }
  return static_cast<double>(sum);
}

std::vector<EnumeratedPath> SortedPaths(const EnumeratedLattice& lattice,
                                        double tie) {
  std::vector<EnumeratedPath> paths = lattice.paths;
  std::sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
    return a.log_q_joint > b.log_q_joint;
  });
  auto ends = [](const EnumeratedPath& p) {
    std::vector<int32_t> e;
    for (const CharRange& s : p.spans) e.push_back(s.end);
    return e;
  };
  // Re-order each run of tied scores by end offsets.
  size_t start = 0;
  while (start < paths.size()) {
    size_t stop = start + 1;
    while (stop < paths.size() &&
           std::fabs(paths[stop].log_q_joint - paths[start].log_q_joint) <= tie) {
      ++stop;
    }
    std::sort(paths.begin() + start, paths.begin() + stop,
              [&](const auto& a, const auto& b) { return ends(a) < ends(b); });
    start = stop;
  }
  return paths;
}

}  // namespace tokmarg::oracle
