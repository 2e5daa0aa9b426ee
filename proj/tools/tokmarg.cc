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

// Command-line front end: evaluation runs and the analyses built on them.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokmarg/analysis.h"
#include "tokmarg/error.h"
#include "tokmarg/estimators.h"
#include "tokmarg/lattice.h"
#include "tokmarg/line_client.h"
#include "tokmarg/ngram.h"
#include "tokmarg/pipeline.h"
#include "tokmarg/sampler.h"
#include "tokmarg/utf8.h"
#include "tokmarg/vocab.h"

namespace {

using json = nlohmann::json;
using namespace tokmarg;
namespace fs = std::filesystem;

struct Flags {
  std::string vocab;
  std::vector<std::string> corpus;
  std::vector<std::string> lm_corpus;
  std::string scorer;
  std::vector<std::string> modes;
  int samples = 128;
  double temperature = 1.0;
  bool consistent = false;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;
  int64_t timeout_ms = 30000;
  int max_in_flight = 64;

  // analysis-specific
  std::string results;
  std::string estimator = "wor1best";
  std::vector<double> temperatures;
  std::string text;
  bool bits = false;
  int order = 3;
  double discount = 0.75;
};

json ConfigJson(const std::string& command, const Flags& f) {
  json c;
  c["command"] = command;
  c["vocab"] = f.vocab;
  c["corpus"] = f.corpus;
  c["lm_corpus"] = f.lm_corpus;
  c["scorer"] = f.scorer;
  c["modes"] = f.modes;
  c["samples"] = f.samples;
  c["temperature"] = f.temperature;
  c["consistent"] = f.consistent;
  c["seed"] = f.seed;
  c["out"] = f.out;
  return c;
}

std::vector<Estimator> ParseModes(const std::vector<std::string>& modes) {
  std::vector<Estimator> out;
  for (const std::string& m : modes) out.push_back(ParseEstimator(m));
  return out;
}

EvaluationConfig MakeEvaluationConfig(const Flags& f) {
  EvaluationConfig c;
  c.estimators = ParseModes(f.modes);
  c.samples = f.samples;
  c.temperature = f.temperature;
  c.consistent = f.consistent;
  c.seed = f.seed;
  c.workers = f.workers;
  return c;
}

std::unique_ptr<Scorer> ScorerFromFlags(const Flags& f, const Vocab& vocab) {
  std::vector<Document> lm_docs;
  if (!f.lm_corpus.empty()) lm_docs = LoadCorpora(f.lm_corpus);
  ClientOptions options;
  options.max_in_flight = static_cast<size_t>(f.max_in_flight);
  options.timeout = std::chrono::milliseconds(f.timeout_ms);
  return MakeScorer(f.scorer, vocab, lm_docs, options, f.workers);
}

std::string OutPath(const Flags& f, const std::string& name) {
  fs::create_directories(f.out);
  return (fs::path(f.out) / name).string();
}

void Report(const std::string& path) { std::cerr << "wrote " << path << '\n'; }

int CmdEvaluate(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  auto scorer = ScorerFromFlags(f, vocab);
  const EvaluationConfig config = MakeEvaluationConfig(f);
  const std::vector<DocumentResult> results =
      EvaluateCorpus(docs, vocab, *scorer, config);
  const json cfg = ConfigJson("evaluate", f);
  const std::string results_path = OutPath(f, "results.jsonl");
  WriteResults(results_path, cfg, results);
  Report(results_path);
  const std::string aggregate_path = OutPath(f, "aggregate.csv");
  WriteAggregate(aggregate_path, cfg, results, config.estimators);
  Report(aggregate_path);
  return 0;
}

int CmdEntropy(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  std::vector<double> entropy(docs.size());
  std::vector<int64_t> tokens(docs.size());
  ParallelFor(docs.size(), f.workers, [&](size_t i) {
    const Lattice lattice =
        Lattice::Build(std::string_view(docs[i].text), vocab, f.temperature);
    entropy[i] = LatticeEntropy(lattice);
    tokens[i] = static_cast<int64_t>(lattice.word_spans().size());
  });
  const double scale = f.bits ? 1.0 / std::log(2.0) : 1.0;
  const std::string unit = f.bits ? "bits" : "nats";
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < docs.size(); ++i) {
    rows.push_back({std::to_string(docs[i].id), docs[i].dataset,
                    std::to_string(tokens[i]), FormatDouble(entropy[i] * scale),
                    FormatDouble(entropy[i] * scale / static_cast<double>(tokens[i]))});
  }
  json cfg = ConfigJson("entropy", f);
  cfg["unit"] = unit;
  const std::string path = OutPath(f, "entropy.csv");
  WriteCsv(path, cfg,
           {"doc_id", "dataset", "whitespace_tokens", "entropy_" + unit,
            "entropy_per_token_" + unit},
           rows);
  Report(path);
  return 0;
}

int CmdSample(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  std::vector<Document> docs;
  if (!f.text.empty()) {
    docs.push_back({0, "text", f.text});
  } else {
    docs = LoadCorpora(f.corpus);
  }
  const std::vector<Estimator> modes = ParseModes(f.modes);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(OutPath(f, "samples.jsonl"), std::ios::binary);
    out = &file;
    json header;
    header["type"] = "header";
    header["format_version"] = kFormatVersion;
    header["config"] = ConfigJson("sample", f);
    *out << header.dump() << '\n';
  }
  for (const Document& doc : docs) {
    const PreparedDocument prepared =
        PreparedDocument::Build(doc, vocab, f.temperature, f.consistent);
    for (Estimator e : modes) {
      const ProposalDraw draw = DrawProposal(prepared, e, f.samples, f.seed);
      for (size_t i = 0; i < draw.paths.size(); ++i) {
        const Tokenisation& t = draw.paths[i];
        json j;
        j["type"] = "sample";
        j["doc_id"] = doc.id;
        j["mode"] = EstimatorName(e);
        j["rank"] = i;
        std::vector<std::string> pieces;
        for (TokenId id : t.token_ids) pieces.push_back(vocab.piece(id));
        j["tokens"] = pieces;
        j["log_q_cond"] = t.log_q_cond;
        j["exhausted"] = draw.exhausted;
        if (draw.set && draw.set->samples[i].gumbel_key) {
          j["gumbel_key"] = *draw.set->samples[i].gumbel_key;
        }
        if (draw.set && draw.set->kappa) j["kappa"] = *draw.set->kappa;
        *out << j.dump() << '\n';
      }
    }
  }
  return 0;
}

int CmdCaching(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  auto scorer = ScorerFromFlags(f, vocab);
  const std::vector<Estimator> modes = ParseModes(f.modes);
  if (modes.size() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "caching takes exactly one --mode");
  }
  struct Work {
    std::vector<CharRange> words;
    std::vector<Tokenisation> paths;
  };
  std::vector<Work> work(docs.size());
  ParallelFor(docs.size(), f.workers, [&](size_t i) {
    const PreparedDocument prepared =
        PreparedDocument::Build(docs[i], vocab, f.temperature, f.consistent);
    const auto spans = prepared.lattice().word_spans();
    work[i].words.assign(spans.begin(), spans.end());
    work[i].paths = DrawProposal(prepared, modes[0], f.samples, f.seed).paths;
  });
  std::vector<std::vector<TokenId>> seqs;
  for (const Work& w : work) {
    for (const Tokenisation& t : w.paths) seqs.push_back(t.token_ids);
  }
  const std::vector<TokenScores> scores = ScoreSequences(*scorer, vocab, seqs, f.workers);
  std::vector<CachingDocument> caching;
  size_t next = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    CachingDocument cd;
    cd.doc_id = docs[i].id;
    const std::u32string text = DecodeUtf8(docs[i].text);
    for (const CharRange& w : work[i].words) {
      cd.words.push_back(EncodeUtf8(std::u32string_view(text).substr(w.begin, w.size())));
    }
    for (const Tokenisation& t : work[i].paths) {
      cd.samples.push_back(SplitByWord(t, work[i].words, scores[next++].logprobs));
    }
    caching.push_back(std::move(cd));
  }
  const CachingTable table = CachingAnalysis(caching);
  std::vector<std::vector<std::string>> rows;
  for (int subset = 0; subset < 2; ++subset) {
    for (int c = 0; c < 3; ++c) {
      const CachingCell& cell = subset == 0 ? table.all[c] : table.multi_token[c];
      rows.push_back({std::string(WordClassName(static_cast<WordClass>(c))),
                      subset == 0 ? "all" : "multi_token",
                      cell.mean_loss ? FormatDouble(*cell.mean_loss) : "",
                      std::to_string(cell.count)});
    }
  }
  const std::string path = OutPath(f, "table3_caching.csv");
  WriteCsv(path, ConfigJson("caching", f), {"class", "words", "mean_loss_nats", "count"},
           rows);
  Report(path);
  return 0;
}

int CmdCorrelate(const Flags& f) {
  json run_config;
  const std::vector<DocumentResult> results = ReadResults(f.results, &run_config);
  const EntropyGapResult r = EntropyGapCorrelation(results, f.estimator);
  json cfg;
  cfg["command"] = "correlate";
  cfg["results"] = f.results;
  cfg["estimator"] = f.estimator;
  cfg["run"] = run_config;
  cfg["spearman_r"] = r.spearman_r;
  std::vector<std::vector<std::string>> rows;
  for (const CorrelationPoint& p : r.points) {
    rows.push_back({std::to_string(p.doc_id), p.dataset, FormatDouble(p.entropy_per_token),
                    FormatDouble(p.gap_per_token)});
  }
  const std::string path = OutPath(f, "fig3_scatter.csv");
  WriteCsv(path, cfg, {"doc_id", "dataset", "entropy_per_token", "gap_per_token"}, rows);
  Report(path);
  std::cout << "spearman_r " << FormatDouble(r.spearman_r) << '\n';
  return 0;
}

int CmdSweep(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  auto scorer = ScorerFromFlags(f, vocab);
  const Estimator estimator = ParseEstimator(f.estimator);
  const std::vector<SweepRow> sweep = TemperatureSweep(
      docs, vocab, *scorer, f.temperatures, estimator, MakeEvaluationConfig(f));
  json cfg = ConfigJson("sweep", f);
  cfg["estimator"] = f.estimator;
  cfg["temperatures"] = f.temperatures;
  std::vector<std::vector<std::string>> rows;
  for (const SweepRow& r : sweep) {
    rows.push_back({FormatDouble(r.temperature), FormatDouble(r.perplexity),
                    FormatDouble(r.baseline_perplexity),
                    FormatDouble(r.percent_difference)});
  }
  const std::string path = OutPath(f, "fig2_sweep.csv");
  WriteCsv(path, cfg,
           {"temperature", "perplexity", "nbest_perplexity", "percent_difference"}, rows);
  Report(path);
  return 0;
}

int CmdCurve(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  auto scorer = ScorerFromFlags(f, vocab);
  std::vector<ProposalDraw> draws(docs.size());
  std::vector<int64_t> tokens(docs.size());
  ParallelFor(docs.size(), f.workers, [&](size_t i) {
    const PreparedDocument prepared =
        PreparedDocument::Build(docs[i], vocab, f.temperature, f.consistent);
    tokens[i] = prepared.whitespace_tokens();
    draws[i] = DrawProposal(prepared, Estimator::kNBest, f.samples, 0);
  });
  std::vector<std::vector<TokenId>> seqs;
  for (const ProposalDraw& d : draws) {
    for (const Tokenisation& t : d.paths) seqs.push_back(t.token_ids);
  }
  const std::vector<TokenScores> scores = ScoreSequences(*scorer, vocab, seqs, f.workers);
  std::vector<CurveDocument> curve_docs;
  size_t next = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    CurveDocument cd;
    cd.whitespace_tokens = tokens[i];
    for (const Tokenisation& t : draws[i].paths) {
      ScoredSample s;
      s.log_p = scores[next++].Total();
      s.log_q_cond = t.log_q_cond;
      cd.samples.push_back(s);
    }
    curve_docs.push_back(std::move(cd));
  }
  std::vector<std::vector<std::string>> rows;
  for (const CurvePoint& p : CorpusContributionCurve(curve_docs)) {
    rows.push_back({std::to_string(p.prefix), FormatDouble(p.perplexity_by_q),
                    FormatDouble(p.perplexity_by_p)});
  }
  const std::string path = OutPath(f, "fig4_curve.csv");
  WriteCsv(path, ConfigJson("curve", f), {"prefix", "perplexity_by_q", "perplexity_by_p"},
           rows);
  Report(path);
  return 0;
}

int CmdTrainLm(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  const NGramModel model = TrainOnOneBest(vocab, docs, f.order, f.discount, f.workers);
  model.SaveFile(f.out);
  Report(f.out);
  return 0;
}

int CmdLattice(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const Lattice lattice = Lattice::Build(std::string_view(f.text), vocab, f.temperature);
  std::cout << lattice.ToJson(vocab) << '\n';
  return 0;
}

int CmdCoverage(const Flags& f) {
  const Vocab vocab = LoadVocabFile(f.vocab);
  const std::vector<Document> docs = LoadCorpora(f.corpus);
  int bad = 0;
  for (const Document& doc : docs) {
    const std::vector<int32_t> positions = CoverageCheck(vocab, std::string_view(doc.text));
    if (positions.empty()) continue;
    ++bad;
    json j;
    j["doc_id"] = doc.id;
    j["uncovered"] = positions;
    std::cout << j.dump() << '\n';
  }
  return bad == 0 ? 0 : 1;
}

void AddVocab(CLI::App* cmd, Flags& f) {
  cmd->add_option("--vocab", f.vocab, "Vocabulary file (piece<TAB>score)")
      ->required()
      ->check(CLI::ExistingFile);
}

void AddCorpus(CLI::App* cmd, Flags& f, bool required = true) {
  auto* opt = cmd->add_option("--corpus", f.corpus,
                              "Corpus file (one document per line) or directory");
  if (required) opt->required();
}

void AddScorer(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scorer", f.scorer,
                  "builtin:MODEL.json | builtin:N,D | builtin-cache:... | "
                  "exec:COMMAND | tcp:HOST:PORT")
      ->required();
  cmd->add_option("--lm-corpus", f.lm_corpus, "Training corpus for builtin:N,D");
  cmd->add_option("--timeout-ms", f.timeout_ms, "External scorer timeout");
  cmd->add_option("--max-in-flight", f.max_in_flight, "External scorer window")
      ->check(CLI::PositiveNumber);
}

void AddSampling(CLI::App* cmd, Flags& f, bool seed_required) {
  cmd->add_option("--samples", f.samples, "Samples per document (k)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--temperature", f.temperature, "Proposal temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--consistent", f.consistent, "One tokenisation per word type");
  auto* seed = cmd->add_option("--seed", f.seed, "Random seed");
  if (seed_required) seed->required();
}

void AddModes(CLI::App* cmd, Flags& f) {
  cmd->add_option("--mode", f.modes, "wr | wor | wor1best | nbest | jensen")
      ->required()
      ->check(CLI::IsMember({"wr", "wor", "wor1best", "nbest", "jensen"}));
}

void AddWorkersAndOut(CLI::App* cmd, Flags& f) {
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  Flags f;
  CLI::App app{"Marginal likelihood of text over subword tokenisations"};
  app.require_subcommand(1);

  auto* evaluate = app.add_subcommand("evaluate", "Estimate marginal likelihoods");
  AddVocab(evaluate, f);
  AddCorpus(evaluate, f);
  AddScorer(evaluate, f);
  AddModes(evaluate, f);
  AddSampling(evaluate, f, true);
  AddWorkersAndOut(evaluate, f);

  auto* entropy = app.add_subcommand("entropy", "Tokeniser entropy per document");
  AddVocab(entropy, f);
  AddCorpus(entropy, f);
  entropy->add_option("--temperature", f.temperature)->check(CLI::PositiveNumber);
  entropy->add_flag("--bits", f.bits, "Report bits instead of nats");
  AddWorkersAndOut(entropy, f);

  auto* sample = app.add_subcommand("sample", "Print sampled tokenisations");
  AddVocab(sample, f);
  AddCorpus(sample, f, false);
  sample->add_option("--text", f.text, "Tokenise this text instead of a corpus");
  AddModes(sample, f);
  AddSampling(sample, f, true);
  sample->add_option("--out", f.out, "Write samples.jsonl here instead of stdout");

  auto* caching = app.add_subcommand("caching", "Loss of repeated words by class");
  AddVocab(caching, f);
  AddCorpus(caching, f);
  AddScorer(caching, f);
  AddModes(caching, f);
  AddSampling(caching, f, true);
  AddWorkersAndOut(caching, f);

  auto* correlate = app.add_subcommand("correlate", "Entropy against marginal gap");
  correlate->add_option("--results", f.results, "results.jsonl from evaluate")
      ->required()
      ->check(CLI::ExistingFile);
  correlate->add_option("--estimator", f.estimator, "Estimator for the gap");
  correlate->add_option("--out", f.out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Perplexity against temperature");
  AddVocab(sweep, f);
  AddCorpus(sweep, f);
  AddScorer(sweep, f);
  sweep->add_option("--estimator", f.estimator, "Estimator to sweep");
  sweep->add_option("--temperatures", f.temperatures, "Temperature grid")
      ->required()
      ->check(CLI::PositiveNumber);
  AddSampling(sweep, f, true);
  AddWorkersAndOut(sweep, f);

  auto* curve = app.add_subcommand("curve", "Contribution of n-best samples");
  AddVocab(curve, f);
  AddCorpus(curve, f);
  AddScorer(curve, f);
  curve->add_option("--samples", f.samples, "n-best size")->check(CLI::PositiveNumber);
  curve->add_option("--temperature", f.temperature)->check(CLI::PositiveNumber);
  curve->add_flag("--consistent", f.consistent);
  AddWorkersAndOut(curve, f);

  auto* train = app.add_subcommand("train-lm", "Train the built-in n-gram scorer");
  AddVocab(train, f);
  AddCorpus(train, f);
  train->add_option("--order", f.order, "n-gram order")->check(CLI::PositiveNumber);
  train->add_option("--discount", f.discount, "Absolute discount in (0, 1)");
  train->add_option("--workers", f.workers)->check(CLI::PositiveNumber);
  train->add_option("--out", f.out, "Model JSON path")->required();

  auto* lattice = app.add_subcommand("lattice", "Dump the lattice of a text as JSON");
  AddVocab(lattice, f);
  lattice->add_option("--text", f.text, "Text")->required();
  lattice->add_option("--temperature", f.temperature)->check(CLI::PositiveNumber);

  auto* coverage = app.add_subcommand("coverage", "Report uncoverable positions");
  AddVocab(coverage, f);
  AddCorpus(coverage, f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) return CmdEvaluate(f);
    if (*entropy) return CmdEntropy(f);
    if (*sample) {
      if (f.text.empty() && f.corpus.empty()) {
        throw Error(ErrorKind::kInvalidArgument, "sample needs --text or --corpus");
      }
      return CmdSample(f);
    }
    if (*caching) return CmdCaching(f);
    if (*correlate) return CmdCorrelate(f);
    if (*sweep) return CmdSweep(f);
    if (*curve) return CmdCurve(f);
    if (*train) return CmdTrainLm(f);
    if (*lattice) return CmdLattice(f);
    if (*coverage) return CmdCoverage(f);
  } catch (const Error& e) {
    json report;
    report["error"] = ErrorKindName(e.kind());
    report["message"] = e.what();
    std::cerr << report.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    json report;
    report["error"] = "Internal";
    report["message"] = e.what();
    std::cerr << report.dump() << '\n';
    return 2;
  }
  return 1;
}
