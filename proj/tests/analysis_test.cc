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

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"
#include "tokmarg/error.h"
#include "tokmarg/log_math.h"

namespace tokmarg {
namespace {

using testing::MakeVocab;

TEST(SpearmanTest, Examples) {
  const std::vector<double> x = {1, 2, 3};
  EXPECT_EQ(1.0, SpearmanCorrelation(x, std::vector<double>{1, 2, 3}));
  EXPECT_EQ(-1.0, SpearmanCorrelation(x, std::vector<double>{3, 2, 1}));
  EXPECT_EQ(0.5, SpearmanCorrelation(x, std::vector<double>{2, 1, 3}));
}

TEST(SpearmanTest, AverageRanksForTies) {
  // Ranks of y: {1.5, 1.5, 3, 4}.
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {5, 5, 6, 7};
  const double mean = 2.5;
  const double rx[] = {1, 2, 3, 4}, ry[] = {1.5, 1.5, 3, 4};
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  EXPECT_NEAR(sxy / std::sqrt(sxx * syy), SpearmanCorrelation(x, y), 1e-15);
}

TEST(SpearmanTest, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20), y(20), fx(20), fy(20);
    for (int i = 0; i < 20; ++i) {
      x[i] = g(rng);
      y[i] = x[i] + g(rng);
      fx[i] = std::exp(x[i]);
      fy[i] = -1.0 / (1.0 + std::exp(-y[i]));
    }
    const double r = SpearmanCorrelation(x, y);
    EXPECT_GE(r, -1.0);
    EXPECT_LE(r, 1.0);
    EXPECT_NEAR(r, SpearmanCorrelation(fx, y), 1e-12);
    EXPECT_NEAR(-r, SpearmanCorrelation(x, fy), 1e-12);
  }
}

TEST(SpearmanTest, Degenerate) {
  try {
    SpearmanCorrelation(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorKind::kDegenerateInput, e.kind());
  }
  EXPECT_THROW(SpearmanCorrelation(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
               Error);
  EXPECT_THROW(SpearmanCorrelation(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
               Error);
}

TEST(EntropyGapTest, PointsAndCorrelation) {
  std::vector<DocumentResult> results(3);
  for (int i = 0; i < 3; ++i) {
    results[i].doc_id = i;
    results[i].whitespace_token_count = 2;
    results[i].entropy_nats = i + 1.0;
    results[i].log_p_best = -10.0;
    results[i].log_p_marginal["nbest"] = -10.0 + 0.1 * i;
  }
  const EntropyGapResult r = EntropyGapCorrelation(results, "nbest");
  ASSERT_EQ(3, r.points.size());
  EXPECT_EQ(1.0, r.spearman_r);
  EXPECT_EQ(1.5, r.points[2].entropy_per_token);
  EXPECT_NEAR(0.1, r.points[2].gap_per_token, 1e-12);
}

WordSegmentation Seg(std::vector<std::vector<TokenId>> tokens, std::vector<double> losses) {
  return WordSegmentation{std::move(tokens), std::move(losses)};
}

TEST(CachingTest, NoRepeats) {
  CachingDocument doc;
  doc.words = {"x", "y"};
  doc.samples = {Seg({{0}, {1}}, {1.0, 2.0})};
  const CachingTable t = CachingAnalysis(std::vector{doc});
  EXPECT_EQ(2, t.all[0].count);
  EXPECT_EQ(1.5, *t.all[0].mean_loss);
  EXPECT_EQ(0, t.all[1].count);
  EXPECT_FALSE(t.all[1].mean_loss);
  EXPECT_EQ(0, t.all[2].count);
  EXPECT_FALSE(t.all[2].mean_loss);
  EXPECT_FALSE(t.multi_token[0].mean_loss);
}

// "ab ab" with samples [ab][ab] and [ab][a b].
TEST(CachingTest, AbAbHandLabels) {
  const TokenId a = 0, b = 1, ab = 2;
  CachingDocument doc;
  doc.doc_id = 4;
  doc.words = {"ab", "ab"};
  doc.samples = {Seg({{ab}, {ab}}, {3.0, 0.5}), Seg({{ab}, {a, b}}, {3.0, 7.0})};
  const auto records = ClassifyOccurrences(doc);
  ASSERT_EQ(4, records.size());
  EXPECT_EQ(WordClass::kFirst, records[0].word_class);
  EXPECT_EQ(WordClass::kSameTok, records[1].word_class);
  EXPECT_EQ(WordClass::kFirst, records[2].word_class);
  EXPECT_EQ(WordClass::kDiffTok, records[3].word_class);
  EXPECT_TRUE(records[3].multi_token);
  EXPECT_EQ(1, records[3].sample);
  EXPECT_EQ(1, records[3].position);
  const CachingTable t = TabulateCaching(records);
  EXPECT_EQ(3.0, *t.all[0].mean_loss);
  EXPECT_EQ(0.5, *t.all[1].mean_loss);
  EXPECT_EQ(7.0, *t.all[2].mean_loss);
  EXPECT_EQ(1, t.multi_token[2].count);
}

TEST(CachingTest, SameBeatsDiffWhenAnyEarlierMatches) {
  CachingDocument doc;
  doc.words = {"w", "w", "w"};
  doc.samples = {Seg({{0}, {1, 2}, {0}}, {1, 1, 1})};
  const auto r = ClassifyOccurrences(doc);
  EXPECT_EQ(WordClass::kDiffTok, r[1].word_class);
  EXPECT_EQ(WordClass::kSameTok, r[2].word_class);
}

TEST(CachingTest, ClassesArePartition) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    CachingDocument doc;
    const int n = 1 + static_cast<int>(rng() % 12);
    WordSegmentation s;
    for (int i = 0; i < n; ++i) {
      doc.words.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
      s.word_tokens.push_back({static_cast<TokenId>(rng() % 2)});
      if (rng() % 2) s.word_tokens.back().push_back(5);
      s.word_losses.push_back(1.0);
    }
    doc.samples = {s, s};
    const auto records = ClassifyOccurrences(doc);
    EXPECT_EQ(static_cast<size_t>(2 * n), records.size());
    const CachingTable t = TabulateCaching(records);
    EXPECT_EQ(2 * n, t.all[0].count + t.all[1].count + t.all[2].count);
  }
}

TEST(CachingTest, SplitByWord) {
  const Vocab v = MakeVocab({{"\xE2\x96\x81", -1}, {"\xE2\x96\x81" "ab", -1}, {"a", -1},
                             {"b", -1}});
  const Lattice l = Lattice::Build(std::string_view("ab ab"), v);
  for (const Tokenisation& t : ViterbiNBest(l, 10)) {
    std::vector<double> lp(t.size(), -1.0);
    const WordSegmentation s = SplitByWord(t, l.word_spans(), lp);
    ASSERT_EQ(2, s.word_tokens.size());
    EXPECT_EQ(t.size(), s.word_tokens[0].size() + s.word_tokens[1].size());
    EXPECT_EQ(static_cast<double>(s.word_tokens[0].size()), s.word_losses[0]);
    EXPECT_EQ(v.piece(s.word_tokens[1][0]).rfind("\xE2\x96\x81", 0), 0u);
  }
}

std::vector<ScoredSample> Samples(std::vector<std::pair<double, double>> p_q) {
  std::vector<ScoredSample> out;
  for (auto [p, q] : p_q) out.push_back(ScoredSample{p, q, std::nullopt, false});
  return out;
}

TEST(CurveTest, ToyTable) {
  // Q-order puts the model's best path last.
  const auto s = Samples({{-12, -0.1}, {-10, -1.0}, {-1, -3.0}});
  const auto by_q = ContributionCurve(s, CurveOrder::kByProposal);
  const auto by_p = ContributionCurve(s, CurveOrder::kByModel);
  ASSERT_EQ(3, by_p.size());
  EXPECT_EQ(-1.0, by_p[0]);
  EXPECT_EQ(-12.0, by_q[0]);
  EXPECT_DOUBLE_EQ(by_q.back(), by_p.back());
  const double gap = by_p.back() - by_p[0];
  EXPECT_NEAR(std::log1p(std::exp(-9.0) + std::exp(-11.0)), gap, 1e-15);
  EXPECT_NEAR(1.40102e-4, gap, 1e-9);
}

TEST(CurveTest, ByModelDominatesAndIsMonotone) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-30, -1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<double, double>> pq;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 10); ++i) pq.push_back({u(rng), u(rng)});
    const auto s = Samples(pq);
    const auto by_q = ContributionCurve(s, CurveOrder::kByProposal);
    const auto by_p = ContributionCurve(s, CurveOrder::kByModel);
    for (size_t m = 0; m < s.size(); ++m) {
      // Equal in exact arithmetic once both prefixes hold the same set.
      EXPECT_GE(by_p[m], by_q[m] - 1e-12 * std::fabs(by_q[m]));
      if (m) EXPECT_GE(by_p[m], by_p[m - 1]);
    }
  }
}

TEST(CurveTest, CorpusCurve) {
  std::vector<CurveDocument> docs(2);
  docs[0].samples = Samples({{-2, -0.5}, {-3, -1}});
  docs[0].whitespace_tokens = 2;
  docs[1].samples = Samples({{-4, -0.1}});
  docs[1].whitespace_tokens = 3;
  const auto points = CorpusContributionCurve(docs);
  ASSERT_EQ(2, points.size());
  EXPECT_NEAR(std::exp(6.0 / 5), points[0].perplexity_by_q, 1e-12);
  EXPECT_NEAR(std::exp(-(LogAddExp(-2, -3) - 4) / 5), points[1].perplexity_by_p, 1e-12);
  EXPECT_LE(points[1].perplexity_by_p, points[0].perplexity_by_p);
}

std::vector<Document> SweepDocs() {
  return {{0, "toy", "ab ab"}, {1, "toy", "aab b"}, {2, "toy", "ba"}};
}

Vocab SweepVocab() {
  return MakeVocab({{"\xE2\x96\x81", -2.0}, {"\xE2\x96\x81" "a", -1.5},
                    {"\xE2\x96\x81" "ab", -1.0}, {"\xE2\x96\x81" "b", -1.4},
                    {"a", -0.9}, {"b", -1.1}, {"ab", -1.3}});
}

TEST(SweepTest, UnitTemperatureReproducesPlainRun) {
  const Vocab v = SweepVocab();
  const auto docs = SweepDocs();
  testing::TokeniserScorer scorer(v, 1.0);
  EvaluationConfig config;
  config.samples = 2;
  config.seed = 17;
  const std::vector<double> temps = {0.5, 1.0, 2.0};
  const auto rows =
      TemperatureSweep(docs, v, scorer, temps, Estimator::kWithoutReplacement, config);
  ASSERT_EQ(3, rows.size());
  config.estimators = {Estimator::kWithoutReplacement};
  const auto plain = EvaluateCorpus(docs, v, scorer, config);
  EXPECT_EQ(Perplexity(plain, "wor"), rows[1].perplexity);
  config.estimators = {Estimator::kNBest};
  EXPECT_EQ(Perplexity(EvaluateCorpus(docs, v, scorer, config), "nbest"),
            rows[0].baseline_perplexity);
}

// With enough samples to exhaust every lattice the sweep is flat.
TEST(SweepTest, FlatWhenExhausted) {
  const Vocab v = SweepVocab();
  const auto docs = SweepDocs();
  testing::TokeniserScorer scorer(v, 1.0);
  EvaluationConfig config;
  config.samples = 64;
  config.seed = 3;
  const std::vector<double> temps = {0.25, 1.0, 4.0};
  for (Estimator e : {Estimator::kWithoutReplacement, Estimator::kWithoutReplacementBest}) {
    for (const SweepRow& r : TemperatureSweep(docs, v, scorer, temps, e, config)) {
      EXPECT_NEAR(1.0, r.perplexity, 1e-12);
      EXPECT_NEAR(0.0, r.percent_difference, 1e-9);
    }
  }
}

// At tau -> 0 a single WOR sample is the one-best path.
TEST(SweepTest, ColdLimitCollapsesToOneBest) {
  const Vocab v = SweepVocab();
  const auto docs = SweepDocs();
  testing::TokeniserScorer scorer(v, 1.0);
  EvaluationConfig config;
  config.samples = 1;
  config.seed = 8;
  config.temperature = 1e-3;
  config.estimators = {Estimator::kWithoutReplacement};
  for (const DocumentResult& r : EvaluateCorpus(docs, v, scorer, config)) {
    const PreparedDocument p = PreparedDocument::Build(docs[r.doc_id], v, 1e-3, false);
    EXPECT_TRUE(DrawProposal(p, Estimator::kWithoutReplacement, 1, 8).paths[0].SamePath(
        ViterbiBest(p.lattice())));
  }
}

}  // namespace
}  // namespace tokmarg
