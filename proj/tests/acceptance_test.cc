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

// Acceptance checks. Prints one [PASS] or [FAIL] line per criterion and
// exits non-zero if any selected criterion fails. `--only N` runs one.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "synthetic_corpus.h"
#include "test_util.h"
#include "tokmarg/analysis.h"
#include "tokmarg/error.h"
#include "tokmarg/estimators.h"
#include "tokmarg/lattice.h"
#include "tokmarg/line_client.h"
#include "tokmarg/ngram.h"
#include "tokmarg/oracle.h"
#include "tokmarg/pipeline.h"
#include "tokmarg/sampler.h"

namespace tokmarg::testing {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::vector<Fixture> LatticeFixtures() {
  std::mt19937_64 rng(2026);
  std::vector<Fixture> out;
  for (int i = 0; i < 500; ++i) out.push_back(RandomFixture(rng));
  return out;
}

// 1
Outcome LatticeForward() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int bad = 0;
  for (const Fixture& f : LatticeFixtures()) {
    const Lattice lattice = Lattice::Build(std::string_view(f.text), f.vocab, f.temperature);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    const double d = std::abs(lattice.log_normalizer() - e.log_normalizer);
    worst = std::max(worst, d);
    if (!(d <= 1e-9)) ++bad;
  }
  const double secs = Seconds(start);
  return {bad == 0 && secs < 10.0,
          Fmt("500 fixtures, %d outside 1e-9, max |alpha[n] - oracle| = %.3g, %.2f s",
              bad, worst, secs)};
}

// 2
Outcome Entropy() {
  double worst = 0.0;
  int bad = 0, single = 0, single_bad = 0;
  std::vector<Fixture> fixtures = LatticeFixtures();
  fixtures.push_back({"abc", MakeVocab({{"a", -1.0}, {"b", -2.0}, {"c", -0.5}}), 1.0});
  fixtures.push_back({"ab ab", MakeVocab({{"ab", -0.7}}), 0.5});
  for (const Fixture& f : fixtures) {
    const Lattice lattice = Lattice::Build(std::string_view(f.text), f.vocab, f.temperature);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    const double h = LatticeEntropy(lattice);
    const double d = std::abs(h - oracle::ExactEntropy(e));
    worst = std::max(worst, d);
    if (!(d <= 1e-9)) ++bad;
    if (e.paths.size() == 1) {
      ++single;
      if (h != 0.0) ++single_bad;
    }
  }
  return {bad == 0 && single_bad == 0 && single >= 2,
          Fmt("%zu fixtures, %d outside 1e-9 (max %.3g); %d single-path, %d nonzero",
              fixtures.size(), bad, worst, single, single_bad)};
}

// 3
Outcome NBestExact() {
  int bad = 0, compared = 0;
  double worst = 0.0;
  for (const Fixture& f : LatticeFixtures()) {
    const Lattice lattice = Lattice::Build(std::string_view(f.text), f.vocab, f.temperature);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    const auto expected = oracle::SortedPaths(e);
    const auto got = ViterbiNBest(lattice, static_cast<int>(expected.size()));
    bool ok = got.size() == expected.size();
    for (size_t i = 0; ok && i < got.size(); ++i) {
      const double d = std::max(std::abs(got[i].log_q_joint - expected[i].log_q_joint),
                                std::abs(got[i].log_q_cond - expected[i].log_q_cond));
      worst = std::max(worst, d);
      ok = got[i].token_ids == expected[i].token_ids &&
           got[i].spans == expected[i].spans && d <= 1e-12;
    }
    compared += static_cast<int>(expected.size());
    if (!ok) ++bad;
  }
  return {bad == 0, Fmt("500 fixtures (%d paths), %d mismatched, max score diff %.3g",
                        compared, bad, worst)};
}

// 4
Outcome WorFirstDraw() {
  const auto start = std::chrono::steady_clock::now();
  const Vocab vocab = AaaVocab();
  const Lattice lattice = Lattice::Build(std::string_view("aaa"), vocab);
  const auto a = *vocab.Find(std::string_view("a"));
  const auto aa = *vocab.Find(std::string_view("aa"));
  const std::vector<std::vector<TokenId>> paths = {{a, a, a}, {aa, a}, {a, aa}};
  const double expected[] = {2.0 / 7, 5.0 / 14, 5.0 / 14};
  constexpr int kRuns = 10000;
  int counts[3] = {0, 0, 0};
  for (int seed = 0; seed < kRuns; ++seed) {
    const SampleSet set = SampleWithoutReplacement(lattice, 2, seed);
    const auto& first = set.samples.front().tokenisation.token_ids;
    for (int i = 0; i < 3; ++i) counts[i] += first == paths[i];
  }
  bool ok = counts[0] + counts[1] + counts[2] == kRuns;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const double f = static_cast<double>(counts[i]) / kRuns;
    const double sigma = std::sqrt(expected[i] * (1 - expected[i]) / kRuns);
    ok = ok && std::abs(f - expected[i]) <= 3 * sigma;
    detail += Fmt("%.4f (%.4f +- %.4f) ", f, expected[i], 3 * sigma);
  }
  const double secs = Seconds(start);
  return {ok && secs < 60.0, Fmt("first-draw frequencies %s%.2f s", detail.c_str(), secs)};
}

double ToyEstimate(const Lattice& lattice, Estimator est, int k, uint64_t seed) {
  const SampleMode mode = est == Estimator::kWithReplacement
                              ? SampleMode::kWithReplacement
                          : est == Estimator::kWithoutReplacement
                              ? SampleMode::kWithoutReplacement
                              : SampleMode::kWithoutReplacementBest;
  const SampleSet set = DrawSamples(lattice, mode, k, seed);
  std::vector<double> log_p;
  for (const Sample& s : set.samples) log_p.push_back(ToyLogP(s.tokenisation.token_ids));
  switch (est) {
    case Estimator::kWithReplacement:
      return EstimateWithReplacement(ScoreSamples(set, log_p));
    case Estimator::kWithoutReplacement:
      return EstimateWithoutReplacement(set, log_p);
    default:
      return EstimateWithoutReplacementBest(set, log_p);
  }
}

// 5
Outcome Unbiasedness() {
  const std::vector<Fixture> fixtures = {
      {"ab", AbVocab(), 1.0},   {"aaa", AaaVocab(), 1.0},  {"ab ab", AbVocab(), 1.0},
      {"aaaa", AaaVocab(), 1.0}, {"aaaa", AaaVocab(), 0.5},
  };
  const Estimator estimators[] = {Estimator::kWithReplacement,
                                  Estimator::kWithoutReplacement,
                                  Estimator::kWithoutReplacementBest};
  constexpr int kRuns = 10000;
  int checks = 0, bad = 0;
  double worst_z = 0.0;
  std::string failures;
  for (size_t fi = 0; fi < fixtures.size(); ++fi) {
    const Fixture& f = fixtures[fi];
    const Lattice lattice = Lattice::Build(std::string_view(f.text), f.vocab, f.temperature);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    const double exact = std::exp(oracle::ExactMarginal(
        e, [](const oracle::EnumeratedPath& p) { return ToyLogP(p.token_ids); }));
    for (Estimator est : estimators) {
      for (int k = 1; k <= 2; ++k) {
        double sum = 0.0, sum_sq = 0.0;
        for (int r = 0; r < kRuns; ++r) {
          const double v = std::exp(ToyEstimate(lattice, est, k, 7919 * fi + r));
          sum += v;
          sum_sq += v * v;
        }
        const double mean = sum / kRuns;
        const double var = std::max(0.0, (sum_sq - kRuns * mean * mean) / (kRuns - 1));
        const double se = std::sqrt(var / kRuns);
        const double err = std::abs(mean - exact);
        // Exhausted sets are deterministic; compare against rounding only.
        const bool ok = err <= std::max(3 * se, 1e-12 * exact);
        if (se > 0) worst_z = std::max(worst_z, err / se);
        ++checks;
        if (!ok) {
          ++bad;
          failures += Fmt(" [%s %s k=%d: %.6g vs %.6g, se %.3g]", f.text.c_str(),
                          std::string(EstimatorName(est)).c_str(), k, mean, exact, se);
        }
      }
    }
  }
  return {bad == 0, Fmt("%d configs (wr, wor, wor1best; k = 1, 2; 2-5 paths), %d outside "
                        "3 SE, max |z| = %.2f%s",
                        checks, bad, worst_z, failures.c_str())};
}

// 6
Outcome ZeroVariance() {
  std::mt19937_64 rng(6);
  const Estimator estimators[] = {Estimator::kWithReplacement,
                                  Estimator::kWithoutReplacement,
                                  Estimator::kWithoutReplacementBest, Estimator::kNBest};
  std::map<Estimator, int> total, exact_ok, exhausted_bad;
  std::map<Estimator, double> worst;
  for (int i = 0; i < 100; ++i) {
    const Fixture f = RandomFixture(rng);
    const Estimator est = estimators[i % 4];
    const int k = 1 + static_cast<int>(rng() % 6);
    const uint64_t seed = rng();
    const Lattice lattice = Lattice::Build(std::string_view(f.text), f.vocab, f.temperature);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    const double exact = oracle::ExactMarginal(
        e, [](const oracle::EnumeratedPath& p) { return p.log_q_cond; });
    double estimate = 0.0;
    bool exhausted = false;
    if (est == Estimator::kNBest) {
      std::vector<double> log_p;
      for (const Tokenisation& t : ViterbiNBest(lattice, k)) log_p.push_back(t.log_q_cond);
      estimate = EstimateNBest(log_p);
      exhausted = static_cast<size_t>(k) >= e.paths.size();
    } else {
      const SampleMode mode = est == Estimator::kWithReplacement
                                  ? SampleMode::kWithReplacement
                              : est == Estimator::kWithoutReplacement
                                  ? SampleMode::kWithoutReplacement
                                  : SampleMode::kWithoutReplacementBest;
      const SampleSet set = DrawSamples(lattice, mode, k, seed);
      std::vector<double> log_p;
      for (const Sample& s : set.samples) log_p.push_back(s.tokenisation.log_q_cond);
      exhausted = set.exhausted;
      estimate = est == Estimator::kWithReplacement
                     ? EstimateWithReplacement(ScoreSamples(set, log_p))
                 : est == Estimator::kWithoutReplacement
                     ? EstimateWithoutReplacement(set, log_p)
                     : EstimateWithoutReplacementBest(set, log_p);
    }
    const double d = std::abs(estimate - exact);
    ++total[est];
    worst[est] = std::max(worst[est], d);
    if (d < 1e-9) {
      ++exact_ok[est];
    } else if (exhausted || est == Estimator::kWithReplacement) {
      ++exhausted_bad[est];
    }
  }
  bool ok = true;
  std::string detail;
  for (Estimator est : estimators) {
    ok = ok && exact_ok[est] == total[est];
    detail += Fmt("%s %d/%d (max dev %.3g, %d exhausted/wr misses); ",
                  std::string(EstimatorName(est)).c_str(), exact_ok[est], total[est],
                  worst[est], exhausted_bad[est]);
  }
  return {ok, detail + "within 1e-9 with log P = log Q(T|D)"};
}

// 7
Outcome Exhaustion() {
  std::mt19937_64 rng(7);
  const Estimator estimators[] = {Estimator::kWithoutReplacement,
                                  Estimator::kWithoutReplacementBest, Estimator::kNBest};
  int fixtures = 0, unstable = 0, wrong = 0, not_exhausted = 0;
  double worst = 0.0;
  while (fixtures < 200) {
    const Fixture f = RandomFixture(rng);
    const auto e = oracle::Enumerate(std::string_view(f.text), f.vocab, f.temperature);
    if (e.paths.size() > 64) continue;
    ++fixtures;
    const double exact = oracle::ExactMarginal(
        e, [](const oracle::EnumeratedPath& p) { return ToyLogP(p.token_ids); });
    const Document doc{fixtures, "acceptance", f.text};
    const auto prepared = PreparedDocument::Build(doc, f.vocab, f.temperature, false);
    const int k = static_cast<int>(e.paths.size() + rng() % 3);
    for (Estimator est : estimators) {
      std::optional<uint64_t> bits;
      for (uint64_t seed = 1; seed <= 5; ++seed) {
        const ProposalDraw draw = DrawProposal(prepared, est, k, seed);
        if (!draw.exhausted) ++not_exhausted;
        std::vector<double> log_p;
        for (const Tokenisation& t : draw.paths) log_p.push_back(ToyLogP(t.token_ids));
        const double v = EstimateFromDraw(draw, log_p);
        if (bits && *bits != std::bit_cast<uint64_t>(v)) ++unstable;
        bits = std::bit_cast<uint64_t>(v);
        const double d = std::abs(v - exact);
        worst = std::max(worst, d);
        if (!(d <= 1e-9)) ++wrong;
      }
    }
  }
  return {unstable == 0 && wrong == 0 && not_exhausted == 0,
          Fmt("%d fixtures x {wor, wor1best, nbest} x 5 seeds, k >= #paths: %d unstable, "
              "%d outside 1e-9 (max %.3g), %d not flagged exhausted",
              fixtures, unstable, wrong, worst, not_exhausted)};
}

// Fraction of drawn document tokenisations that segment every repeated
// word type identically.
std::pair<int, int> ConsistentDraws(const std::vector<Document>& docs, const Vocab& vocab,
                                    bool consistent) {
  const Estimator estimators[] = {Estimator::kWithReplacement,
                                  Estimator::kWithoutReplacement,
                                  Estimator::kWithoutReplacementBest, Estimator::kNBest};
  int checked = 0, good = 0;
  for (const Document& doc : docs) {
    const auto prepared = PreparedDocument::Build(doc, vocab, 1.0, consistent);
    const auto spans = prepared.lattice().word_spans();
    const std::u32string text = DecodeUtf8(doc.text);
    for (Estimator est : estimators) {
      const ProposalDraw draw = DrawProposal(prepared, est, 16, 88);
      for (const Tokenisation& t : draw.paths) {
        ++checked;
        prepared.lattice().FindPath(t);
        const std::vector<double> zeros(t.size(), 0.0);
        const WordSegmentation seg = SplitByWord(t, spans, zeros);
        std::map<std::u32string, std::vector<TokenId>> seen;
        bool same = true;
        for (size_t w = 0; w < spans.size(); ++w) {
          const auto word = text.substr(spans[w].begin, spans[w].size());
          const auto [it, fresh] = seen.emplace(word, seg.word_tokens[w]);
          if (!fresh && it->second != seg.word_tokens[w]) same = false;
        }
        good += same;
      }
    }
  }
  return {good, checked};
}

// 8
Outcome Consistency() {
  const Vocab vocab = MakeVocab({
      {"▁", -2.0}, {"a", -1.5}, {"b", -1.6}, {"c", -1.7},
      {"▁a", -1.2}, {"▁b", -1.9}, {"▁c", -1.4}, {"ab", -1.1},
      {"bc", -1.3}, {"ca", -1.8}, {"▁ab", -1.0}, {"abc", -1.6},
      {"▁ca", -2.1}, {"cab", -2.3},
  });
  const std::vector<std::string> pool = {"ab", "abc", "bca", "cab", "abab", "c"};
  std::mt19937_64 rng(8);
  std::vector<Document> docs;
  for (int d = 0; d < 40; ++d) {
    std::string text;
    const int n = 8 + static_cast<int>(rng() % 9);
    for (int w = 0; w < n; ++w) {
      if (w) text += ' ';
      text += pool[rng() % pool.size()];
    }
    docs.push_back({d, "repeats", text});
  }
  const auto [good, checked] = ConsistentDraws(docs, vocab, true);
  const auto [free_good, free_checked] = ConsistentDraws(docs, vocab, false);
  return {checked > 0 && good == checked,
          Fmt("consistent mode: %d/%d tokenisations repeat types identically "
              "(unconstrained proposal: %d/%d)",
              good, checked, free_good, free_checked)};
}

// 9
Outcome Directional() {
  const auto [in_grammar, out_grammar] = MakeGrammars(99);
  const std::vector<Document> train = Generate(in_grammar, 5000, 12, 28, 1, "in");
  const std::vector<Document> test = Generate(out_grammar, 60, 10, 20, 2, "out");
  int64_t train_words = 0;
  for (const Document& d : train) train_words += CountWhitespaceTokens(d.text);
  const Vocab vocab = LearnVocab(train, 400);
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  auto model = std::make_shared<const NGramModel>(
      TrainOnOneBest(vocab, train, 3, 0.75, workers));
  NGramScorer scorer(model);
  EvaluationConfig config;
  config.estimators = {Estimator::kNBest};
  config.samples = 32;
  config.seed = 9;
  config.workers = workers;
  const auto results = EvaluateCorpus(test, vocab, scorer, config);
  int below = 0;
  for (const DocumentResult& r : results) {
    if (r.log_p_marginal.at("nbest") < r.log_p_best) ++below;
  }
  const double one_best = Perplexity(results, kOneBest);
  const double nbest = Perplexity(results, "nbest");
  const double improvement = 1.0 - nbest / one_best;
  return {below == 0 && nbest < one_best && improvement > 0,
          Fmt("%lld training words, %zu-piece vocab, %zu held-out docs; one-best ppl %.6g, "
              "32-best ppl %.6g, relative improvement %.2f%%, %d docs below one-best",
              static_cast<long long>(train_words), vocab.size(), results.size(), one_best,
              nbest, 100 * improvement, below)};
}

// 10
Outcome AnalysisArithmetic() {
  std::string failures;
  const std::vector<double> x = {1, 2, 3};
  if (SpearmanCorrelation(x, std::vector<double>{1, 2, 3}) != 1.0) failures += " r=1";
  if (SpearmanCorrelation(x, std::vector<double>{3, 2, 1}) != -1.0) failures += " r=-1";
  if (SpearmanCorrelation(x, std::vector<double>{2, 1, 3}) != 0.5) failures += " r=0.5";

  const Vocab vocab = AbVocab();
  const Lattice lattice = Lattice::Build(std::string_view("ab ab"), vocab);
  const TokenId a = *vocab.Find(std::string_view("a"));
  const TokenId b = *vocab.Find(std::string_view("b"));
  const TokenId ab = *vocab.Find(std::string_view("ab"));
  const std::vector<TokenId> whole = {ab, ab}, split = {ab, a, b};
  CachingDocument doc;
  doc.words = {"ab", "ab"};
  for (const Tokenisation& t : ViterbiNBest(lattice, 4)) {
    if (t.token_ids == whole || t.token_ids == split) {
      const std::vector<double> lp(t.size(), -1.0);
      doc.samples.push_back(SplitByWord(t, lattice.word_spans(), lp));
    }
  }
  if (doc.samples.size() == 2 && doc.samples[0].word_tokens[1].size() == 2) {
    std::swap(doc.samples[0], doc.samples[1]);
  }
  const auto records = ClassifyOccurrences(doc);
  const WordClass expected[] = {WordClass::kFirst, WordClass::kSameTok,
                                WordClass::kFirst, WordClass::kDiffTok};
  bool labels = records.size() == 4;
  for (size_t i = 0; labels && i < 4; ++i) labels = records[i].word_class == expected[i];
  if (!labels) failures += " caching";

  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(-20.0, 6.0);
  int curves = 0;
  std::vector<CurveDocument> corpus;
  for (int trial = 0; trial < 200; ++trial) {
    CurveDocument cd;
    cd.whitespace_tokens = 1 + static_cast<int64_t>(rng() % 10);
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      ScoredSample s;
      s.log_p = g(rng);
      s.log_q_cond = g(rng) / 10;
      cd.samples.push_back(s);
    }
    const auto by_p = ContributionCurve(cd.samples, CurveOrder::kByModel);
    for (size_t i = 1; i < by_p.size(); ++i) {
      if (by_p[i] < by_p[i - 1]) {
        failures += " by_p-doc";
        break;
      }
    }
    ++curves;
    corpus.push_back(std::move(cd));
  }
  const auto points = CorpusContributionCurve(corpus);
  for (size_t i = 1; i < points.size(); ++i) {
    if (points[i].perplexity_by_p > points[i - 1].perplexity_by_p) {
      failures += " by_p-corpus";
      break;
    }
  }
  return {failures.empty(),
          Fmt("Spearman {1, -1, 0.5} exact, \"ab ab\" labels FIRST/SAME_TOK/FIRST/DIFF_TOK, "
              "%d random by_p curves plus a %zu-point corpus curve monotone%s%s",
              curves, points.size(), failures.empty() ? "" : "; failed:",
              failures.c_str())};
}

// 11
Outcome Protocol() {
  const std::string echo = ECHO_SCORER_PATH;
  std::vector<ScoreRequest> requests;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    ScoreRequest r;
    r.id = 50000 + 3 * i;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int j = 0; j < n; ++j) r.tokens.push_back(std::string(1 + rng() % 6, 'a' + j));
    requests.push_back(std::move(r));
  }
  ClientOptions options;
  options.max_in_flight = 64;
  ExternalScorer scorer(LineTransport::SpawnProcess(echo + " --reverse 7"), options);
  const auto start = std::chrono::steady_clock::now();
  const auto responses = scorer.RoundTrip(requests);
  const double secs = Seconds(start);
  int lost = 0, mismatched = 0;
  if (responses.size() != requests.size()) lost = std::abs(
      static_cast<int>(requests.size()) - static_cast<int>(responses.size()));
  for (size_t i = 0; i < std::min(responses.size(), requests.size()); ++i) {
    bool ok = responses[i].id == requests[i].id &&
              responses[i].logprobs.size() == requests[i].tokens.size();
    for (size_t j = 0; ok && j < requests[i].tokens.size(); ++j) {
      ok = responses[i].logprobs[j] ==
           -(0.5 + 0.1 * static_cast<double>(requests[i].tokens[j].size()));
    }
    mismatched += !ok;
  }

  std::string injected = "no error";
  bool protocol_error = false;
  try {
    ExternalScorer bad(LineTransport::SpawnProcess(echo + " --malformed-at 5000"), options);
    const auto got = bad.RoundTrip(requests);
    injected = Fmt("returned %zu responses", got.size());
  } catch (const Error& e) {
    protocol_error = e.kind() == ErrorKind::kProtocolError;
    injected = std::string(ErrorKindName(e.kind()));
  }
  const size_t peak = scorer.peak_in_flight();
  return {lost == 0 && mismatched == 0 && peak <= 64 && protocol_error,
          Fmt("10000 requests in %.2f s, peak in flight %zu, %d lost, %d mismatched; "
              "malformed line at 5000 -> %s",
              secs, peak, lost, mismatched, injected.c_str())};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const Criterion kCriteria[] = {
    {"lattice forward score", LatticeForward},
    {"lattice entropy", Entropy},
    {"n-best exactness", NBestExact},
    {"WOR first-draw law", WorFirstDraw},
    {"estimator unbiasedness", Unbiasedness},
    {"zero-variance identity", ZeroVariance},
    {"exhaustion", Exhaustion},
    {"consistency contract", Consistency},
    {"directional n-best gain", Directional},
    {"analysis arithmetic", AnalysisArithmetic},
    {"protocol robustness", Protocol},
};

}  // namespace
}  // namespace tokmarg::testing

int main(int argc, char** argv) {
  using tokmarg::testing::kCriteria;
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-11)")
      ->check(CLI::Range(1, static_cast<int>(std::size(kCriteria))));
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (int i = 1; i <= static_cast<int>(std::size(kCriteria)); ++i) {
    if (only && i != only) continue;
    const auto& c = kCriteria[i - 1];
    tokmarg::testing::Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s\n", outcome.pass ? "PASS" : "FAIL", i, c.name,
                outcome.detail.c_str());
    std::fflush(stdout);
    failed += !outcome.pass;
  }
  return failed ? 1 : 0;
}
