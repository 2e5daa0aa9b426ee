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

#ifndef TOKMARG_ESTIMATORS_H_
#define TOKMARG_ESTIMATORS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokmarg/sampler.h"

namespace tokmarg {

enum class Estimator {
  kWithReplacement,        // "wr": importance-weighted average
  kWithoutReplacement,     // "wor": priority-sampling sum
  kWithoutReplacementBest, // "wor1best": T* plus WOR over the rest
  kNBest,                  // "nbest": exact top-n sum
  kJensen,                 // "jensen": mean log weight (diagnostic only)
};

std::string_view EstimatorName(Estimator e);
// Throws kInvalidArgument for an unknown name.
Estimator ParseEstimator(std::string_view name);

// One scored tokenisation.
struct ScoredSample {
  double log_p = 0.0;       // log P_theta(T, D)
  double log_q_cond = 0.0;  // log Q(T|D)
  std::optional<double> log_q_kappa;  // log inclusion probability (WOR)
  bool is_best = false;
};

// q_kappa(T) = 1 - exp(-exp(log_q - kappa)): the probability that a Gumbel
// with location log_q exceeds kappa. kappa = -inf gives 1.
double InclusionProbability(double log_q, double kappa);

// log q_kappa. For log_q - kappa <= -10 the series
//   x - y/2 + y^2/24 - y^4/2880,  x = log_q - kappa, y = exp(x)
// of log(1 - exp(-y)) is used; otherwise log(-expm1(-y)).
double LogInclusionProbability(double log_q, double kappa);

// Pairs a sample set with model scores (one per sample, same order) and
// fills inclusion probabilities from the set's kappa.
std::vector<ScoredSample> ScoreSamples(const SampleSet& set,
                                       std::span<const double> log_p);

// log(1/n sum_i P(T_i, D) / Q(T_i|D)).
double EstimateWithReplacement(std::span<const ScoredSample> samples);

// 1/n sum_i log(P(T_i, D) / Q(T_i|D)); a lower bound in expectation.
double EstimateJensen(std::span<const ScoredSample> samples);

// log sum_i P(T_i, D) / q_kappa(T_i); the exact sum when the set is
// exhausted. Throws kModeMismatch unless set.mode is kWithoutReplacement.
double EstimateWithoutReplacement(const SampleSet& set,
                                  std::span<const double> log_p);

// log(P(T*, D) + sum_{i != *} P(T_i, D) / q_kappa(T_i)); the exact sum when
// exhausted. Throws kModeMismatch unless set.mode is kWithoutReplacementBest.
double EstimateWithoutReplacementBest(const SampleSet& set,
                                      std::span<const double> log_p);

// log sum_i P(T_i, D) over an n-best list.
double EstimateNBest(std::span<const double> log_p);

// Per-document outcome of an evaluation run.
struct DocumentResult {
  int64_t doc_id = 0;
  std::string dataset;
  double log_p_best = 0.0;
  std::map<std::string, double> log_p_marginal;  // keyed by EstimatorName
  std::map<std::string, bool> exhausted;
  double entropy_nats = 0.0;
  int64_t whitespace_token_count = 0;

  // (log_p_marginal[which] - log_p_best) / whitespace_token_count.
  double MarginalGapPerToken(std::string_view which) const;
};

inline constexpr std::string_view kOneBest = "one-best";

// exp(-sum log_p / sum whitespace tokens) with log_p taken from the named
// estimator, or the one-best score for kOneBest.
double Perplexity(std::span<const DocumentResult> results,
                  std::string_view which);

}  // namespace tokmarg

#endif  // TOKMARG_ESTIMATORS_H_
