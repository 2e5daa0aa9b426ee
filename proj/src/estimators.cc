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

#include "tokmarg/estimators.h"

#include <algorithm>
#include <cmath>

#include "tokmarg/error.h"
#include "tokmarg/log_math.h"

namespace tokmarg {

std::string_view EstimatorName(Estimator e) {
  switch (e) {
    case Estimator::kWithReplacement: return "wr";
    case Estimator::kWithoutReplacement: return "wor";
    case Estimator::kWithoutReplacementBest: return "wor1best";
    case Estimator::kNBest: return "nbest";
    case Estimator::kJensen: return "jensen";
  }
  return "unknown";
}

Estimator ParseEstimator(std::string_view name) {
  for (Estimator e : {Estimator::kWithReplacement, Estimator::kWithoutReplacement,
                      Estimator::kWithoutReplacementBest, Estimator::kNBest,
                      Estimator::kJensen}) {
    if (EstimatorName(e) == name) return e;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown estimator '" + std::string(name) + "'");
}

double LogInclusionProbability(double log_q, double kappa) {
  if (kappa == kNegInf) return 0.0;
  const double x = log_q - kappa;
  const double y = std::exp(x);
  if (x <= -10.0) {
    return x - y / 2 + y * y / 24 - y * y * y * y / 2880;
  }
  return std::log(-std::expm1(-y));
}

double InclusionProbability(double log_q, double kappa) {
  if (kappa == kNegInf) return 1.0;
  return -std::expm1(-std::exp(log_q - kappa));
}

std::vector<ScoredSample> ScoreSamples(const SampleSet& set,
                                       std::span<const double> log_p) {
  if (log_p.size() != set.samples.size()) {
    throw Error(ErrorKind::kInvalidArgument, "one score per sample required");
  }
  std::vector<ScoredSample> scored;
  scored.reserve(log_p.size());
  for (size_t i = 0; i < log_p.size(); ++i) {
    ScoredSample s;
    s.log_p = log_p[i];
    s.log_q_cond = set.samples[i].tokenisation.log_q_cond;
    s.is_best = set.contains_best && i == 0;
    if (set.mode != SampleMode::kWithReplacement && !s.is_best) {
      s.log_q_kappa = set.kappa ? LogInclusionProbability(s.log_q_cond, *set.kappa)
                                : 0.0;
    }
    scored.push_back(s);
  }
  return scored;
}

namespace {

// Exact sum over a complete path set. Sorting first makes the result
// independent of the order the sampler produced the paths in.
double ExactSum(std::span<const double> log_p) {
  std::vector<double> sorted(log_p.begin(), log_p.end());
  std::sort(sorted.begin(), sorted.end());
  return LogSumExp(sorted);
}

void CheckScores(const SampleSet& set, std::span<const double> log_p) {
  if (log_p.size() != set.samples.size()) {
    throw Error(ErrorKind::kInvalidArgument, "one score per sample required");
  }
  if (set.samples.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty sample set");
  }
}

}  // namespace

double EstimateWithReplacement(std::span<const ScoredSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::kInvalidArgument, "no samples");
  std::vector<double> weights;
  weights.reserve(samples.size());
  for (const ScoredSample& s : samples) weights.push_back(s.log_p - s.log_q_cond);
  return LogSumExp(weights) - std::log(static_cast<double>(samples.size()));
}

double EstimateJensen(std::span<const ScoredSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::kInvalidArgument, "no samples");
  double sum = 0.0;
  for (const ScoredSample& s : samples) sum += s.log_p - s.log_q_cond;
  return sum / static_cast<double>(samples.size());
}

double EstimateWithoutReplacement(const SampleSet& set,
                                  std::span<const double> log_p) {
  if (set.mode != SampleMode::kWithoutReplacement) {
    throw Error(ErrorKind::kModeMismatch,
                "wor estimator given " + std::string(SampleModeName(set.mode)) +
                    " samples");
  }
  CheckScores(set, log_p);
  if (set.exhausted) return ExactSum(log_p);
  std::vector<double> terms;
  terms.reserve(log_p.size());
  for (size_t i = 0; i < log_p.size(); ++i) {
    terms.push_back(log_p[i] - LogInclusionProbability(
                                   set.samples[i].tokenisation.log_q_cond, *set.kappa));
  }
  return LogSumExp(terms);
}

double EstimateWithoutReplacementBest(const SampleSet& set,
                                      std::span<const double> log_p) {
  if (set.mode != SampleMode::kWithoutReplacementBest || !set.contains_best) {
    throw Error(ErrorKind::kModeMismatch,
                "wor1best estimator given " +
                    std::string(SampleModeName(set.mode)) + " samples");
  }
  CheckScores(set, log_p);
  if (set.exhausted) return ExactSum(log_p);
  std::vector<double> terms;
  terms.reserve(log_p.size() - 1);
  for (size_t i = 1; i < log_p.size(); ++i) {
    terms.push_back(log_p[i] - LogInclusionProbability(
                                   set.samples[i].tokenisation.log_q_cond, *set.kappa));
  }
  return LogAddExp(log_p[0], LogSumExp(terms));
}

double EstimateNBest(std::span<const double> log_p) {
  if (log_p.empty()) throw Error(ErrorKind::kInvalidArgument, "empty n-best list");
  return LogSumExp(log_p);
}

double DocumentResult::MarginalGapPerToken(std::string_view which) const {
  const auto it = log_p_marginal.find(std::string(which));
  if (it == log_p_marginal.end()) {
    throw Error(ErrorKind::kInvalidArgument,
                "no estimate '" + std::string(which) + "'");
  }
  return (it->second - log_p_best) / static_cast<double>(whitespace_token_count);
}

double Perplexity(std::span<const DocumentResult> results,
                  std::string_view which) {
  if (results.empty()) throw Error(ErrorKind::kInvalidArgument, "no documents");
  double log_p = 0.0;
  int64_t tokens = 0;
  for (const DocumentResult& r : results) {
    if (r.whitespace_token_count < 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "document " + std::to_string(r.doc_id) + " has no tokens");
    }
    if (which == kOneBest) {
      log_p += r.log_p_best;
    } else {
      const auto it = r.log_p_marginal.find(std::string(which));
      if (it == r.log_p_marginal.end()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "no estimate '" + std::string(which) + "'");
      }
      log_p += it->second;
    }
    tokens += r.whitespace_token_count;
  }
  return std::exp(-log_p / static_cast<double>(tokens));
}

}  // namespace tokmarg
