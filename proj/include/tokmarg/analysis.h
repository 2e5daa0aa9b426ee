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

#ifndef TOKMARG_ANALYSIS_H_
#define TOKMARG_ANALYSIS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokmarg/estimators.h"
#include "tokmarg/lattice.h"
#include "tokmarg/pipeline.h"
#include "tokmarg/scorer.h"

namespace tokmarg {

// ---------------------------------------------------------------------------
// Caching study

enum class WordClass {
  kFirst,      // no earlier occurrence of the word
  kSameTok,    // some earlier occurrence has the same token sequence
  kDiffTok,    // every earlier occurrence was tokenised differently
};

std::string_view WordClassName(WordClass c);

// One sampled tokenisation of a document, grouped by whitespace word.
struct WordSegmentation {
  std::vector<std::vector<TokenId>> word_tokens;
  std::vector<double> word_losses;  // -sum of the word's token log-probs
};

// Groups the tokens of `t` by the word containing each token's start.
// `logprobs` holds one log-probability per token; the EOS term is ignored.
WordSegmentation SplitByWord(const Tokenisation& t,
                             std::span<const CharRange> word_spans,
                             std::span<const double> logprobs);

struct CachingDocument {
  int64_t doc_id = 0;
  std::vector<std::string> words;  // exact whitespace-delimited strings
  std::vector<WordSegmentation> samples;
};

struct CachingRecord {
  std::string word;
  int64_t doc_id = 0;
  int32_t position = 0;  // word index within the document
  int32_t sample = 0;
  WordClass word_class = WordClass::kFirst;
  double loss = 0.0;      // nats
  bool multi_token = false;
};

// Classifies every (word, sample) pair. Samples are independent: an earlier
// occurrence only counts within the same sampled tokenisation.
std::vector<CachingRecord> ClassifyOccurrences(const CachingDocument& doc);

struct CachingCell {
  std::optional<double> mean_loss;  // absent when count is zero
  int64_t count = 0;
};

struct CachingTable {
  CachingCell all[3];          // indexed by WordClass
  CachingCell multi_token[3];  // occurrences split into 2 or more tokens
};

// Unweighted microaverages of word losses per class.
CachingTable CachingAnalysis(std::span<const CachingDocument> docs);
CachingTable TabulateCaching(std::span<const CachingRecord> records);

// ---------------------------------------------------------------------------
// Entropy against marginal gap

// Spearman rank correlation with average ranks for ties. Throws
// kInvalidArgument on a length mismatch and kDegenerateInput for fewer than
// three points or a constant variable.
double SpearmanCorrelation(std::span<const double> x, std::span<const double> y);

struct CorrelationPoint {
  int64_t doc_id = 0;
  std::string dataset;
  double entropy_per_token = 0.0;
  double gap_per_token = 0.0;
};

struct EntropyGapResult {
  double spearman_r = 0.0;
  std::vector<CorrelationPoint> points;
};

EntropyGapResult EntropyGapCorrelation(std::span<const DocumentResult> results,
                                       std::string_view estimator);

// ---------------------------------------------------------------------------
// Sample contribution curves

enum class CurveOrder {
  kByProposal,  // descending Q(T|D)
  kByModel,     // descending P(T, D)
};

// log sum_{i <= m} P(T_i, D) for m = 1..n after re-sorting by `order`.
std::vector<double> ContributionCurve(std::span<const ScoredSample> samples,
                                      CurveOrder order);

struct CurveDocument {
  std::vector<ScoredSample> samples;
  int64_t whitespace_tokens = 0;
};

struct CurvePoint {
  int32_t prefix = 0;
  double perplexity_by_q = 0.0;
  double perplexity_by_p = 0.0;
};

// Corpus perplexity per whitespace token for prefixes 1..max n. Documents
// with fewer samples contribute their full sum.
std::vector<CurvePoint> CorpusContributionCurve(std::span<const CurveDocument> docs);

// ---------------------------------------------------------------------------
// Temperature sweep

struct SweepRow {
  double temperature = 1.0;
  double perplexity = 0.0;
  double baseline_perplexity = 0.0;  // n-best at tau = 1 with the same k
  double percent_difference = 0.0;   // 100 (ppl - baseline) / baseline
};

// Re-evaluates `estimator` at each temperature; the seed is shared so
// tau = 1 reproduces an untempered run.
std::vector<SweepRow> TemperatureSweep(std::span<const Document> docs,
                                       const Vocab& vocab, Scorer& scorer,
                                       std::span<const double> temperatures,
                                       Estimator estimator,
                                       const EvaluationConfig& base);

}  // namespace tokmarg

#endif  // TOKMARG_ANALYSIS_H_
