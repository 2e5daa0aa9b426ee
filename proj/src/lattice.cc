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

#include "tokmarg/lattice.h"

#include <algorithm>
#include <cmath>
#include <queue>

#include "json.hpp"
#include "tokmarg/error.h"
#include "tokmarg/log_math.h"

namespace tokmarg {

Lattice Lattice::Build(std::string_view utf8_text, const Vocab& vocab,
                       double temperature) {
  const std::u32string text = DecodeUtf8(utf8_text);
  return Build(std::u32string_view(text), vocab, temperature);
}

Lattice Lattice::Build(std::u32string_view text, const Vocab& vocab,
                       double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kInvalidArgument,
                "temperature must be positive and finite");
  }
  Lattice lattice;
  lattice.temperature_ = temperature;
  lattice.text_length_ = static_cast<int32_t>(text.size());
  lattice.word_spans_ = WhitespaceWords(text);

  const int32_t shift = vocab.is_marked() ? 1 : 0;
  const size_t max_len = vocab.max_piece_chars();
  int32_t base = 0;
  for (size_t w = 0; w < lattice.word_spans_.size(); ++w) {
    const CharRange word = lattice.word_spans_[w];
    const std::u32string form =
        vocab.MatchForm(text.substr(word.begin, word.size()));
    const std::u32string_view view(form);
    const auto n = static_cast<int32_t>(form.size());
    auto to_doc = [&](int32_t p) {
      return word.begin + std::max<int32_t>(0, p - shift);
    };
    for (int32_t start = 0; start < n; ++start) {
      for (int32_t len = 1; len <= static_cast<int32_t>(max_len) &&
                            start + len <= n;
           ++len) {
        const auto id = vocab.Find(view.substr(start, len));
        if (!id) continue;
        LatticeEdge edge;
        edge.from = base + start;
        edge.to = base + start + len;
        edge.token = *id;
        edge.score = vocab.score(*id) / temperature;
        edge.span = {to_doc(start), to_doc(start + len)};
        edge.word = static_cast<int32_t>(w);
        lattice.edges_.push_back(edge);
      }
    }
    base += n;
  }
  lattice.alpha_.assign(base + 1, kNegInf);
  lattice.beta_.assign(base + 1, kNegInf);
  lattice.Index();
  lattice.RunForwardBackward();

  if (lattice.log_normalizer() == kNegInf) {
    std::string positions;
    for (int32_t p : CoverageCheck(vocab, text)) {
      if (!positions.empty()) positions += ",";
      positions += std::to_string(p);
    }
    throw Error(ErrorKind::kUncoverable, "position(s) " + positions);
  }
  return lattice;
}

void Lattice::Index() {
  const int32_t num = num_nodes();
  in_offsets_.assign(num + 1, 0);
  out_offsets_.assign(num + 1, 0);
  for (const LatticeEdge& e : edges_) {
    ++in_offsets_[e.to + 1];
    ++out_offsets_[e.from + 1];
  }
  for (int32_t i = 0; i < num; ++i) {
    in_offsets_[i + 1] += in_offsets_[i];
    out_offsets_[i + 1] += out_offsets_[i];
  }
  in_edges_.resize(edges_.size());
  out_edges_.resize(edges_.size());
  std::vector<int32_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  std::vector<int32_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
  // Edges are generated in (from, length) order, so incoming lists come out
  // sorted by start node and outgoing lists by end node.
  for (int32_t id = 0; id < static_cast<int32_t>(edges_.size()); ++id) {
    in_edges_[in_fill[edges_[id].to]++] = id;
    out_edges_[out_fill[edges_[id].from]++] = id;
  }
}

void Lattice::RunForwardBackward() {
  const int32_t last = final_node();
  std::vector<double> terms;
  alpha_[0] = 0.0;
  for (int32_t i = 1; i <= last; ++i) {
    terms.clear();
    for (int32_t id : incoming(i)) {
      terms.push_back(alpha_[edges_[id].from] + edges_[id].score);
    }
    alpha_[i] = LogSumExp(terms);
  }
  beta_[last] = 0.0;
  for (int32_t i = last - 1; i >= 0; --i) {
    terms.clear();
    for (int32_t id : outgoing(i)) {
      terms.push_back(beta_[edges_[id].to] + edges_[id].score);
    }
    beta_[i] = LogSumExp(terms);
  }
}

std::span<const int32_t> Lattice::incoming(int32_t node) const {
  return std::span<const int32_t>(in_edges_).subspan(
      in_offsets_[node], in_offsets_[node + 1] - in_offsets_[node]);
}

std::span<const int32_t> Lattice::outgoing(int32_t node) const {
  return std::span<const int32_t>(out_edges_).subspan(
      out_offsets_[node], out_offsets_[node + 1] - out_offsets_[node]);
}

Tokenisation Lattice::MakeTokenisation(std::span<const int32_t> edge_path) const {
  Tokenisation t;
  t.token_ids.reserve(edge_path.size());
  t.spans.reserve(edge_path.size());
  double joint = 0.0;
  for (int32_t id : edge_path) {
    const LatticeEdge& e = edges_[id];
    t.token_ids.push_back(e.token);
    t.spans.push_back(e.span);
    joint += e.score;
  }
  t.log_q_joint = joint;
  t.log_q_cond = joint - log_normalizer();
  return t;
}

std::vector<int32_t> Lattice::FindPath(const Tokenisation& t) const {
  if (t.token_ids.size() != t.spans.size()) {
    throw Error(ErrorKind::kNotAPath, "token and span counts differ");
  }
  std::vector<int32_t> path;
  path.reserve(t.size());
  int32_t node = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    int32_t found = -1;
    for (int32_t id : outgoing(node)) {
      if (edges_[id].token == t.token_ids[i] && edges_[id].span == t.spans[i]) {
        found = id;
        break;
      }
    }
    if (found < 0) {
      throw Error(ErrorKind::kNotAPath,
                  "no edge for token " + std::to_string(i) + " at node " +
                      std::to_string(node));
    }
    path.push_back(found);
    node = edges_[found].to;
  }
  if (node != final_node()) {
    throw Error(ErrorKind::kNotAPath, "path stops before the end of the text");
  }
  return path;
}

std::string Lattice::ToJson(const Vocab& vocab) const {
  nlohmann::json j;
  j["num_nodes"] = num_nodes();
  j["temperature"] = temperature_;
  nlohmann::json edges = nlohmann::json::array();
  for (const LatticeEdge& e : edges_) {
    edges.push_back({{"start", e.from},
                     {"end", e.to},
                     {"token", vocab.piece(e.token)},
                     {"score", e.score},
                     {"span", {e.span.begin, e.span.end}}});
  }
  j["edges"] = std::move(edges);
  j["alpha"] = alpha_;
  j["beta"] = beta_;
  return j.dump();
}

PathScore ScoreTokenisation(const Lattice& lattice, const Tokenisation& t) {
  const Tokenisation scored = lattice.MakeTokenisation(lattice.FindPath(t));
  return {scored.log_q_joint, scored.log_q_cond};
}

namespace {

// Scores within this relative distance are treated as tied and ordered by
// the end-node sequence instead. It absorbs summation-order rounding.
bool NearlyEqual(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= 1e-11 * scale;
}

struct Hypothesis {
  int32_t node;
  int32_t edge;    // edge that reached `node`, -1 at the root
  int32_t parent;  // index into the arena, -1 at the root
  double g;        // score of the prefix
  double f;        // g + best completion score
};

}  // namespace

std::vector<Tokenisation> ViterbiNBest(const Lattice& lattice, int n) {
  std::vector<Tokenisation> results;
  if (n < 1) return results;
  const int32_t last = lattice.final_node();

  // Exact best completion from each node; makes the A* heuristic tight.
  std::vector<double> best_suffix(lattice.num_nodes(), kNegInf);
  best_suffix[last] = 0.0;
  for (int32_t i = last - 1; i >= 0; --i) {
    for (int32_t id : lattice.outgoing(i)) {
      const LatticeEdge& e = lattice.edge(id);
      best_suffix[i] = std::max(best_suffix[i], e.score + best_suffix[e.to]);
    }
  }
  if (best_suffix[0] == kNegInf) return results;

  std::vector<Hypothesis> arena;
  arena.push_back({0, -1, -1, 0.0, best_suffix[0]});

  auto end_nodes = [&arena](int32_t h) {
    std::vector<int32_t> nodes;
    for (; arena[h].parent >= 0; h = arena[h].parent) {
      nodes.push_back(arena[h].node);
    }
    std::reverse(nodes.begin(), nodes.end());
    return nodes;
  };
  // True if `a` should be popped after `b`.
  auto after = [&](int32_t a, int32_t b) {
    if (!NearlyEqual(arena[a].f, arena[b].f)) return arena[a].f < arena[b].f;
    const auto ea = end_nodes(a);
    const auto eb = end_nodes(b);
    return std::lexicographical_compare(eb.begin(), eb.end(), ea.begin(),
                                        ea.end());
  };
  std::priority_queue<int32_t, std::vector<int32_t>, decltype(after)> agenda(
      after);
  agenda.push(0);

  while (!agenda.empty() && static_cast<int>(results.size()) < n) {
    const int32_t top = agenda.top();
    agenda.pop();
    const Hypothesis hyp = arena[top];
    if (hyp.node == last) {
      std::vector<int32_t> path;
      for (int32_t h = top; arena[h].parent >= 0; h = arena[h].parent) {
        path.push_back(arena[h].edge);
      }
      std::reverse(path.begin(), path.end());
      results.push_back(lattice.MakeTokenisation(path));
      continue;
    }
    for (int32_t id : lattice.outgoing(hyp.node)) {
      const LatticeEdge& e = lattice.edge(id);
      if (best_suffix[e.to] == kNegInf) continue;
      const double g = hyp.g + e.score;
      arena.push_back({e.to, id, top, g, g + best_suffix[e.to]});
      agenda.push(static_cast<int32_t>(arena.size() - 1));
    }
  }
  return results;
}

Tokenisation ViterbiBest(const Lattice& lattice) {
  auto best = ViterbiNBest(lattice, 1);
  if (best.empty()) throw Error(ErrorKind::kUncoverable, "lattice has no path");
  return std::move(best.front());
}

double LatticeEntropy(const Lattice& lattice) {
  // H[i] is the entropy of the distribution over paths from node 0 to node i.
  // An edge j->i is taken with posterior p = exp(alpha[j] + score - alpha[i]),
  // and H[i] = sum_w p (H[j] - log p).
  const auto& alpha = lattice.alpha();
  std::vector<double> entropy(lattice.num_nodes(), 0.0);
  for (int32_t i = 1; i < lattice.num_nodes(); ++i) {
    if (alpha[i] == kNegInf) continue;
    double h = 0.0;
    for (int32_t id : lattice.incoming(i)) {
      const LatticeEdge& e = lattice.edge(id);
      if (alpha[e.from] == kNegInf) continue;
      const double log_p = alpha[e.from] + e.score - alpha[i];
      h += std::exp(log_p) * (entropy[e.from] - log_p);
    }
    entropy[i] = h;
  }
  return std::max(0.0, entropy.back());
}

std::string Detokenise(const Vocab& vocab, const Tokenisation& t) {
  std::string out;
  const std::string_view marker_space = " ";
  for (size_t i = 0; i < t.size(); ++i) {
    if (vocab.is_marked()) {
      for (char32_t c : vocab.piece_chars(t.token_ids[i])) {
        if (c == vocab.boundary_marker()) {
          out.append(marker_space);
        } else {
          AppendUtf8(c, &out);
        }
      }
    } else {
      if (i > 0 && t.spans[i].begin > t.spans[i - 1].end) out.push_back(' ');
      out += vocab.piece(t.token_ids[i]);
    }
  }
  if (vocab.is_marked() && !out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

}  // namespace tokmarg
