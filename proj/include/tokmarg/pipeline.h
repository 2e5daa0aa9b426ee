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

#ifndef TOKMARG_PIPELINE_H_
#define TOKMARG_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokmarg/estimators.h"
#include "tokmarg/lattice.h"
#include "tokmarg/line_client.h"
#include "tokmarg/ngram.h"
#include "tokmarg/sampler.h"
#include "tokmarg/scorer.h"
#include "tokmarg/vocab.h"

namespace tokmarg {

inline constexpr int kFormatVersion = 1;

struct Document {
  int64_t id = 0;
  std::string dataset;
  std::string text;
};

// Reads each path in turn. A regular file holds one document per non-blank
// line; a directory holds one document per regular file, in name order.
// Ids are assigned consecutively across all paths. The dataset name is the
// path's stem.
std::vector<Document> LoadCorpora(std::span<const std::string> paths);

// Runs fn(0..n-1) on `workers` threads. The exception from the lowest
// failing index is rethrown.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

// Lattices for one document: the full lattice, and the proposal the
// samplers draw from (the type lattice in consistent mode).
class PreparedDocument {
 public:
  static PreparedDocument Build(const Document& doc, const Vocab& vocab,
                                double temperature, bool consistent);

  const Document& document() const { return *doc_; }
  const Lattice& lattice() const { return lattice_; }
  const Lattice& proposal() const {
    return consistent_ ? consistent_->lattice() : lattice_;
  }
  bool consistent() const { return consistent_.has_value(); }
  // Maps a proposal path to a document tokenisation.
  Tokenisation ToDocument(const Tokenisation& t) const {
    return consistent_ ? consistent_->Expand(t) : t;
  }
  int64_t whitespace_tokens() const {
    return static_cast<int64_t>(lattice_.word_spans().size());
  }

 private:
  PreparedDocument(const Document* doc, Lattice lattice)
      : doc_(doc), lattice_(std::move(lattice)) {}

  const Document* doc_;
  Lattice lattice_;
  std::optional<ConsistentProposal> consistent_;
};

// Tokenisations drawn for one estimator, expanded to the whole document.
struct ProposalDraw {
  Estimator estimator = Estimator::kNBest;
  std::optional<SampleSet> set;  // absent for kNBest
  std::vector<Tokenisation> paths;
  bool exhausted = false;
};

// The RNG stream is fixed by (seed, doc id, estimator); kJensen shares the
// draws of kWithReplacement.
ProposalDraw DrawProposal(const PreparedDocument& doc, Estimator estimator,
                          int k, uint64_t seed);

// Estimate of log P(D) from a draw and one model score per path.
double EstimateFromDraw(const ProposalDraw& draw, std::span<const double> log_p);

// Scores token-id sequences through `scorer`, splitting the batch across
// workers when the scorer allows concurrent calls.
std::vector<TokenScores> ScoreSequences(Scorer& scorer, const Vocab& vocab,
                                        std::span<const std::vector<TokenId>> seqs,
                                        int workers);

struct EvaluationConfig {
  std::vector<Estimator> estimators;
  int samples = 128;
  double temperature = 1.0;
  bool consistent = false;
  uint64_t seed = 0;
  int workers = 1;
};

// Full evaluation: lattices, draws, one deduplicated scoring pass, and the
// estimates. Results are ordered by doc id. Errors carry the document id.
std::vector<DocumentResult> EvaluateCorpus(std::span<const Document> docs,
                                           const Vocab& vocab, Scorer& scorer,
                                           const EvaluationConfig& config);

// Trains an n-gram model on the one-best tokenisation of each document.
NGramModel TrainOnOneBest(const Vocab& vocab, std::span<const Document> docs,
                          int order, double discount, int workers);

// Scorer from a spec string:
//   builtin:MODEL.json          saved n-gram model
//   builtin:N,D                 N-gram with discount D trained on `lm_docs`
//   builtin-cache:...           either of the above with a unigram cache
//   exec:COMMAND | tcp:HOST:PORT  external line protocol
std::unique_ptr<Scorer> MakeScorer(const std::string& spec, const Vocab& vocab,
                                   std::span<const Document> lm_docs,
                                   const ClientOptions& options, int workers);

// Results file I/O. The first line is a header with the run config.
nlohmann::json DocumentResultToJson(const DocumentResult& r);
DocumentResult DocumentResultFromJson(const nlohmann::json& j);
void WriteResults(const std::string& path, const nlohmann::json& config,
                  std::span<const DocumentResult> results);
std::vector<DocumentResult> ReadResults(const std::string& path,
                                        nlohmann::json* config = nullptr);

// CSV with a leading "# format_version=N config=JSON" line.
void WriteCsv(const std::string& path, const nlohmann::json& config,
              const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows);
std::string FormatDouble(double v);

// Per-dataset perplexities: one row per dataset in order of appearance.
void WriteAggregate(const std::string& path, const nlohmann::json& config,
                    std::span<const DocumentResult> results,
                    std::span<const Estimator> estimators);

}  // namespace tokmarg

#endif  // TOKMARG_PIPELINE_H_
