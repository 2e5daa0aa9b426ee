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

#include "tokmarg/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tokmarg/error.h"
#include "tokmarg/log_math.h"

namespace tokmarg {

std::string_view WordClassName(WordClass c) {
  switch (c) {
    case WordClass::kFirst:
      return "FIRST";
    case WordClass::kSameTok:
      return "SAME_TOK";
    case WordClass::kDiffTok:
      return "DIFF_TOK";
  }
  return "?";
}

WordSegmentation SplitByWord(const Tokenisation& t,
                             std::span<const CharRange> word_spans,
                             std::span<const double> logprobs) {
  if (logprobs.size() != t.size()) {
    throw Error(ErrorKind::kInvalidArgument, "one log-prob per token expected");
  }
  WordSegmentation out;
  out.word_tokens.resize(word_spans.size());
  out.word_losses.assign(word_spans.size(), 0.0);
  size_t w = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const int32_t start = t.spans[i].begin;
    while (w < word_spans.size() && word_spans[w].end <= start) ++w;
    if (w == word_spans.size() || start < word_spans[w].begin) {
      throw Error(ErrorKind::kInvalidArgument, "token outside every word");
    }
    out.word_tokens[w].push_back(t.token_ids[i]);
    out.word_losses[w] -= logprobs[i];
  }
  return out;
}

std::vector<CachingRecord> ClassifyOccurrences(const CachingDocument& doc) {
  std::vector<CachingRecord> records;
  for (size_t s = 0; s < doc.samples.size(); ++s) {
    const WordSegmentation& seg = doc.samples[s];
    if (seg.word_tokens.size() != doc.words.size()) {
      throw Error(ErrorKind::kInvalidArgument, "sample does not match words");
    }
    // Earlier token sequences seen for each word in this sample.
    std::map<std::string_view, std::vector<const std::vector<TokenId>*>> seen;
    for (size_t k = 0; k < doc.words.size(); ++k) {
      CachingRecord r;
      r.word = doc.words[k];
      r.doc_id = doc.doc_id;
      r.position = static_cast<int32_t>(k);
      r.sample = static_cast<int32_t>(s);
      r.loss = seg.word_losses[k];
      r.multi_token = seg.word_tokens[k].size() > 1;
      auto& earlier = seen[doc.words[k]];
      if (earlier.empty()) {
        r.word_class = WordClass::kFirst;
      } else {
        const bool same = std::any_of(earlier.begin(), earlier.end(), [&](auto* p) {
          return *p == seg.word_tokens[k];
        });
        r.word_class = same ? WordClass::kSameTok : WordClass::kDiffTok;
      }
      earlier.push_back(&seg.word_tokens[k]);
      records.push_back(std::move(r));
    }
  }
  return records;
}

CachingTable TabulateCaching(std::span<const CachingRecord> records) {
  double sum_all[3] = {0, 0, 0};
  double sum_multi[3] = {0, 0, 0};
  CachingTable table;
  for (const CachingRecord& r : records) {
    const int c = static_cast<int>(r.word_class);
    sum_all[c] += r.loss;
    ++table.all[c].count;
    if (r.multi_token) {
      sum_multi[c] += r.loss;
      ++table.multi_token[c].count;
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (table.all[c].count) table.all[c].mean_loss = sum_all[c] / table.all[c].count;
    if (table.multi_token[c].count) {
      table.multi_token[c].mean_loss = sum_multi[c] / table.multi_token[c].count;
    }
  }
  return table;
}

CachingTable CachingAnalysis(std::span<const CachingDocument> docs) {
  std::vector<CachingRecord> records;
  for (const CachingDocument& doc : docs) {
    std::vector<CachingRecord> r = ClassifyOccurrences(doc);
    records.insert(records.end(), std::make_move_iterator(r.begin()),
                   std::make_move_iterator(r.end()));
  }
  return TabulateCaching(records);
}

namespace {

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // 1-based mean
    for (size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

}  // namespace

double SpearmanCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "length mismatch");
  }
  if (x.size() < 3) {
    throw Error(ErrorKind::kDegenerateInput, "need at least 3 points");
  }
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::kDegenerateInput, "constant variable");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EntropyGapResult EntropyGapCorrelation(std::span<const DocumentResult> results,
                                       std::string_view estimator) {
  EntropyGapResult out;
  std::vector<double> x, y;
  for (const DocumentResult& r : results) {
    if (r.whitespace_token_count <= 0) continue;
    CorrelationPoint p;
    p.doc_id = r.doc_id;
    p.dataset = r.dataset;
    p.entropy_per_token =
        r.entropy_nats / static_cast<double>(r.whitespace_token_count);
    p.gap_per_token = r.MarginalGapPerToken(estimator);
    x.push_back(p.entropy_per_token);
    y.push_back(p.gap_per_token);
    out.points.push_back(std::move(p));
  }
  out.spearman_r = SpearmanCorrelation(x, y);
  return out;
}

std::vector<double> ContributionCurve(std::span<const ScoredSample> samples,
                                      CurveOrder order) {
  std::vector<size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return order == CurveOrder::kByProposal
               ? samples[a].log_q_cond > samples[b].log_q_cond
               : samples[a].log_p > samples[b].log_p;
  });
  std::vector<double> curve;
  double acc = kNegInf;
  for (size_t i : idx) {
    acc = LogAddExp(acc, samples[i].log_p);
    curve.push_back(acc);
  }
  return curve;
}

std::vector<CurvePoint> CorpusContributionCurve(std::span<const CurveDocument> docs) {
  size_t longest = 0;
  int64_t tokens = 0;
  std::vector<std::vector<double>> by_q, by_p;
  for (const CurveDocument& d : docs) {
    longest = std::max(longest, d.samples.size());
    tokens += d.whitespace_tokens;
    by_q.push_back(ContributionCurve(d.samples, CurveOrder::kByProposal));
    by_p.push_back(ContributionCurve(d.samples, CurveOrder::kByModel));
  }
  std::vector<CurvePoint> points;
  if (tokens <= 0) return points;
  for (size_t m = 1; m <= longest; ++m) {
    double total_q = 0.0, total_p = 0.0;
    for (size_t d = 0; d < docs.size(); ++d) {
      if (by_q[d].empty()) continue;
      const size_t at = std::min(m, by_q[d].size()) - 1;
      total_q += by_q[d][at];
      total_p += by_p[d][at];
    }
    CurvePoint p;
    p.prefix = static_cast<int32_t>(m);
    p.perplexity_by_q = std::exp(-total_q / static_cast<double>(tokens));
    p.perplexity_by_p = std::exp(-total_p / static_cast<double>(tokens));
    points.push_back(p);
  }
  return points;
}

std::vector<SweepRow> TemperatureSweep(std::span<const Document> docs,
                                       const Vocab& vocab, Scorer& scorer,
                                       std::span<const double> temperatures,
                                       Estimator estimator,
                                       const EvaluationConfig& base) {
  for (double t : temperatures) {
    if (!(t > 0.0)) throw Error(ErrorKind::kInvalidArgument, "temperature must be > 0");
  }
  EvaluationConfig baseline_config = base;
  baseline_config.estimators = {Estimator::kNBest};
  baseline_config.temperature = 1.0;
  const std::vector<DocumentResult> baseline =
      EvaluateCorpus(docs, vocab, scorer, baseline_config);
  const double baseline_ppl = Perplexity(baseline, EstimatorName(Estimator::kNBest));

  std::vector<SweepRow> rows;
  for (double t : temperatures) {
    EvaluationConfig config = base;
    config.estimators = {estimator};
    config.temperature = t;
    const std::vector<DocumentResult> results =
        EvaluateCorpus(docs, vocab, scorer, config);
    SweepRow row;
    row.temperature = t;
    row.perplexity = Perplexity(results, EstimatorName(estimator));
    row.baseline_perplexity = baseline_ppl;
    row.percent_difference = 100.0 * (row.perplexity - baseline_ppl) / baseline_ppl;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tokmarg
