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

#include "tokmarg/pipeline.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "tokmarg/error.h"
#include "tokmarg/log_math.h"
#include "tokmarg/random.h"
#include "tokmarg/utf8.h"

namespace tokmarg {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Re-raises `e` with `context` prepended to its message.
[[noreturn]] void Rethrow(const Error& e, const std::string& context) {
  std::string message = e.what();
  const std::string prefix = std::string(ErrorKindName(e.kind())) + ": ";
  if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
  throw Error(e.kind(), context + ": " + message);
}

void AddDocument(std::string text, const std::string& dataset,
                 const std::string& where, std::vector<Document>* out) {
  try {
    if (CountWhitespaceTokens(text) == 0) return;
  } catch (const Error& e) {
    Rethrow(e, where);
  }
  Document doc;
  doc.id = static_cast<int64_t>(out->size());
  doc.dataset = dataset;
  doc.text = std::move(text);
  out->push_back(std::move(doc));
}

uint64_t StreamFor(Estimator e) {
  switch (e) {
    case Estimator::kWithReplacement:
    case Estimator::kJensen:
      return 1;
    case Estimator::kWithoutReplacement:
      return 2;
    case Estimator::kWithoutReplacementBest:
      return 3;
    case Estimator::kNBest:
      return 4;
  }
  return 0;
}

std::string DocContext(int64_t id) { return "document " + std::to_string(id); }

double LogPOrNull(const json& j) {
  return j.is_null() ? kNegInf : j.get<double>();
}

}  // namespace

std::vector<Document> LoadCorpora(std::span<const std::string> paths) {
  std::vector<Document> docs;
  for (const std::string& path : paths) {
    const std::string dataset = fs::path(path).stem().string();
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw Error(ErrorKind::kIo, "cannot open " + file.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        AddDocument(buffer.str(), dataset, file.string(), &docs);
      }
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      AddDocument(line, dataset, path + ":" + std::to_string(line_no), &docs);
    }
  }
  return docs;
}

void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t threads =
      std::min<size_t>(n, static_cast<size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_index = n;
  std::exception_ptr failure;
  auto run = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

PreparedDocument PreparedDocument::Build(const Document& doc, const Vocab& vocab,
                                         double temperature, bool consistent) {
  PreparedDocument prepared(
      &doc, Lattice::Build(std::string_view(doc.text), vocab, temperature));
  if (consistent) {
    prepared.consistent_ = ConsistentProposal::Build(std::string_view(doc.text),
                                                     vocab, temperature);
  }
  return prepared;
}

ProposalDraw DrawProposal(const PreparedDocument& doc, Estimator estimator,
                          int k, uint64_t seed) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  ProposalDraw draw;
  draw.estimator = estimator;
  const uint64_t stream_seed = DeriveSeed(
      seed, static_cast<uint64_t>(doc.document().id), StreamFor(estimator));
  const Lattice& proposal = doc.proposal();
  switch (estimator) {
    case Estimator::kWithReplacement:
    case Estimator::kJensen:
      draw.set = SampleWithReplacement(proposal, k, stream_seed);
      break;
    case Estimator::kWithoutReplacement:
      draw.set = SampleWithoutReplacement(proposal, k, stream_seed);
      break;
    case Estimator::kWithoutReplacementBest:
      draw.set = SampleWithoutReplacementBest(proposal, k, stream_seed);
      break;
    case Estimator::kNBest: {
      std::vector<Tokenisation> best = ViterbiNBest(proposal, k + 1);
      draw.exhausted = best.size() <= static_cast<size_t>(k);
      if (!draw.exhausted) best.resize(k);
      for (const Tokenisation& t : best) draw.paths.push_back(doc.ToDocument(t));
      return draw;
    }
  }
  draw.exhausted = draw.set->exhausted;
  for (const Sample& s : draw.set->samples) {
    draw.paths.push_back(doc.ToDocument(s.tokenisation));
  }
  return draw;
}

double EstimateFromDraw(const ProposalDraw& draw, std::span<const double> log_p) {
  switch (draw.estimator) {
    case Estimator::kWithReplacement:
      return EstimateWithReplacement(ScoreSamples(*draw.set, log_p));
    case Estimator::kJensen:
      return EstimateJensen(ScoreSamples(*draw.set, log_p));
    case Estimator::kWithoutReplacement:
      return EstimateWithoutReplacement(*draw.set, log_p);
    case Estimator::kWithoutReplacementBest:
      return EstimateWithoutReplacementBest(*draw.set, log_p);
    case Estimator::kNBest:
      return EstimateNBest(log_p);
  }
  return kNegInf;
}

std::vector<TokenScores> ScoreSequences(Scorer& scorer, const Vocab& vocab,
                                        std::span<const std::vector<TokenId>> seqs,
                                        int workers) {
  std::vector<std::vector<std::string>> batch(seqs.size());
  for (size_t i = 0; i < seqs.size(); ++i) {
    for (TokenId id : seqs[i]) batch[i].push_back(vocab.piece(id));
  }
  std::vector<TokenScores> scores;
  const size_t chunks = scorer.concurrent()
                            ? std::min<size_t>(std::max(1, workers), batch.size())
                            : 1;
  if (chunks <= 1) {
    scores = scorer.ScoreBatch(batch);
  } else {
    scores.resize(batch.size());
    const size_t per = (batch.size() + chunks - 1) / chunks;
    ParallelFor(chunks, static_cast<int>(chunks), [&](size_t c) {
      const size_t begin = c * per;
      const size_t end = std::min(batch.size(), begin + per);
      if (begin >= end) return;
      std::vector<TokenScores> part = scorer.ScoreBatch(
          std::span<const std::vector<std::string>>(batch).subspan(begin, end - begin));
      std::move(part.begin(), part.end(), scores.begin() + begin);
    });
  }
  if (scores.size() != seqs.size()) {
    throw Error(ErrorKind::kProtocolError, "scorer returned " +
                                               std::to_string(scores.size()) +
                                               " results for " +
                                               std::to_string(seqs.size()));
  }
  for (size_t i = 0; i < seqs.size(); ++i) {
    if (scores[i].logprobs.size() != seqs[i].size()) {
      throw Error(ErrorKind::kProtocolError,
                  "wrong number of scores for sequence " + std::to_string(i));
    }
  }
  return scores;
}

namespace {

struct DocumentWork {
  DocumentResult result;
  Tokenisation best;
  std::vector<ProposalDraw> draws;
};

}  // namespace

std::vector<DocumentResult> EvaluateCorpus(std::span<const Document> docs,
                                           const Vocab& vocab, Scorer& scorer,
                                           const EvaluationConfig& config) {
  if (config.samples < 1) {
    throw Error(ErrorKind::kInvalidArgument, "samples must be >= 1");
  }
  if (!(config.temperature > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "temperature must be > 0");
  }
  std::vector<DocumentWork> work(docs.size());
  ParallelFor(docs.size(), config.workers, [&](size_t i) {
    const Document& doc = docs[i];
    try {
      const PreparedDocument prepared =
          PreparedDocument::Build(doc, vocab, config.temperature, config.consistent);
      DocumentWork& w = work[i];
      w.result.doc_id = doc.id;
      w.result.dataset = doc.dataset;
      w.result.whitespace_token_count = prepared.whitespace_tokens();
      w.result.entropy_nats = LatticeEntropy(prepared.lattice());
      w.best = ViterbiBest(prepared.lattice());
      for (Estimator e : config.estimators) {
        w.draws.push_back(DrawProposal(prepared, e, config.samples, config.seed));
      }
    } catch (const Error& e) {
      Rethrow(e, DocContext(doc.id));
    }
  });

  // One scoring pass over the distinct sequences of the whole corpus.
  std::map<std::vector<TokenId>, size_t> index;
  std::vector<std::vector<TokenId>> unique;
  auto intern = [&](const std::vector<TokenId>& ids) {
    auto [it, inserted] = index.emplace(ids, unique.size());
    if (inserted) unique.push_back(ids);
    return it->second;
  };
  for (const DocumentWork& w : work) {
    intern(w.best.token_ids);
    for (const ProposalDraw& d : w.draws) {
      for (const Tokenisation& t : d.paths) intern(t.token_ids);
    }
  }
  const std::vector<TokenScores> scores =
      ScoreSequences(scorer, vocab, unique, config.workers);

  std::vector<DocumentResult> results;
  results.reserve(work.size());
  for (DocumentWork& w : work) {
    try {
      w.result.log_p_best = scores[index.at(w.best.token_ids)].Total();
      for (const ProposalDraw& d : w.draws) {
        std::vector<double> log_p;
        for (const Tokenisation& t : d.paths) {
          log_p.push_back(scores[index.at(t.token_ids)].Total());
        }
        const std::string name(EstimatorName(d.estimator));
        w.result.log_p_marginal[name] = EstimateFromDraw(d, log_p);
        w.result.exhausted[name] = d.exhausted;
      }
    } catch (const Error& e) {
      Rethrow(e, DocContext(w.result.doc_id));
    }
    results.push_back(std::move(w.result));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  return results;
}

NGramModel TrainOnOneBest(const Vocab& vocab, std::span<const Document> docs,
                          int order, double discount, int workers) {
  std::vector<std::vector<TokenId>> corpus(docs.size());
  ParallelFor(docs.size(), workers, [&](size_t i) {
    try {
      corpus[i] = ViterbiBest(Lattice::Build(std::string_view(docs[i].text), vocab))
                      .token_ids;
    } catch (const Error& e) {
      Rethrow(e, DocContext(docs[i].id));
    }
  });
  return NGramModel::Train(vocab, corpus, order, discount);
}

std::unique_ptr<Scorer> MakeScorer(const std::string& spec, const Vocab& vocab,
                                   std::span<const Document> lm_docs,
                                   const ClientOptions& options, int workers) {
  if (spec.rfind("exec:", 0) == 0 || spec.rfind("tcp:", 0) == 0) {
    return std::make_unique<ExternalScorer>(LineTransport::FromSpec(spec), options);
  }
  double cache_lambda = 0.0;
  std::string rest;
  if (spec.rfind("builtin-cache:", 0) == 0) {
    cache_lambda = 0.1;
    rest = spec.substr(14);
  } else if (spec.rfind("builtin:", 0) == 0) {
    rest = spec.substr(8);
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown scorer spec '" + spec + "'");
  }
  std::shared_ptr<const NGramModel> model;
  const size_t comma = rest.find(',');
  std::error_code ec;
  if (comma == std::string::npos || fs::is_regular_file(rest, ec)) {
    model = std::make_shared<NGramModel>(NGramModel::LoadFile(rest));
  } else {
    int order = 0;
    double discount = 0.0;
    const char* begin = rest.data();
    const char* end = rest.data() + rest.size();
    const auto r1 = std::from_chars(begin, begin + comma, order);
    const auto r2 = std::from_chars(begin + comma + 1, end, discount);
    if (r1.ec != std::errc() || r1.ptr != begin + comma || r2.ec != std::errc() ||
        r2.ptr != end) {
      throw Error(ErrorKind::kInvalidArgument, "bad builtin spec '" + spec + "'");
    }
    if (lm_docs.empty()) {
      throw Error(ErrorKind::kEmptyCorpus,
                  "builtin:N,D needs a training corpus (--lm-corpus)");
    }
    model = std::make_shared<NGramModel>(
        TrainOnOneBest(vocab, lm_docs, order, discount, workers));
  }
  return std::make_unique<NGramScorer>(std::move(model), cache_lambda);
}

json DocumentResultToJson(const DocumentResult& r) {
  json j;
  j["type"] = "document";
  j["doc_id"] = r.doc_id;
  j["dataset"] = r.dataset;
  j["log_p_best"] = r.log_p_best;
  j["log_p_marginal"] = r.log_p_marginal;
  j["exhausted"] = r.exhausted;
  j["entropy_nats"] = r.entropy_nats;
  j["whitespace_tokens"] = r.whitespace_token_count;
  return j;
}

DocumentResult DocumentResultFromJson(const json& j) {
  DocumentResult r;
  try {
    r.doc_id = j.at("doc_id").get<int64_t>();
    r.dataset = j.at("dataset").get<std::string>();
    r.log_p_best = LogPOrNull(j.at("log_p_best"));
    for (const auto& [name, v] : j.at("log_p_marginal").items()) {
      r.log_p_marginal[name] = LogPOrNull(v);
    }
    for (const auto& [name, v] : j.at("exhausted").items()) {
      r.exhausted[name] = v.get<bool>();
    }
    r.entropy_nats = j.at("entropy_nats").get<double>();
    r.whitespace_token_count = j.at("whitespace_tokens").get<int64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformedLine, e.what());
  }
  return r;
}

void WriteResults(const std::string& path, const json& config,
                  std::span<const DocumentResult> results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  json header;
  header["type"] = "header";
  header["format_version"] = kFormatVersion;
  header["config"] = config;
  out << header.dump() << '\n';
  for (const DocumentResult& r : results) {
    out << DocumentResultToJson(r).dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

std::vector<DocumentResult> ReadResults(const std::string& path, json* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::vector<DocumentResult> results;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorKind::kMalformedLine, path + ":" + std::to_string(line_no));
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      if (j.value("format_version", 0) != kFormatVersion) {
        throw Error(ErrorKind::kMalformedLine,
                    path + ": unsupported format_version");
      }
      if (config) *config = j.value("config", json::object());
    } else if (type == "document") {
      results.push_back(DocumentResultFromJson(j));
    } else {
      throw Error(ErrorKind::kMalformedLine, path + ":" + std::to_string(line_no));
    }
  }
  return results;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void WriteCsv(const std::string& path, const json& config,
              const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "# format_version=" << kFormatVersion << " config=" << config.dump()
      << '\n';
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      const std::string& cell = row[i];
      if (cell.find_first_of(",\"\n") == std::string::npos) {
        out << cell;
        continue;
      }
      out << '"';
      for (char c : cell) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

void WriteAggregate(const std::string& path, const json& config,
                    std::span<const DocumentResult> results,
                    std::span<const Estimator> estimators) {
  std::vector<std::string> header = {"dataset", "documents", "whitespace_tokens",
                                     "one_best_ppl"};
  for (Estimator e : estimators) {
    const std::string name(EstimatorName(e));
    header.push_back(name + "_ppl");
    header.push_back(name + "_rel_improvement");
  }
  std::vector<std::string> datasets;
  for (const DocumentResult& r : results) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
  }
  std::vector<std::vector<std::string>> rows;
  for (const std::string& dataset : datasets) {
    std::vector<DocumentResult> subset;
    int64_t tokens = 0;
    for (const DocumentResult& r : results) {
      if (r.dataset != dataset) continue;
      subset.push_back(r);
      tokens += r.whitespace_token_count;
    }
    const double one_best = Perplexity(subset, kOneBest);
    std::vector<std::string> row = {dataset, std::to_string(subset.size()),
                                    std::to_string(tokens), FormatDouble(one_best)};
    for (Estimator e : estimators) {
      const double ppl = Perplexity(subset, EstimatorName(e));
      row.push_back(FormatDouble(ppl));
      row.push_back(FormatDouble(1.0 - ppl / one_best));
    }
    rows.push_back(std::move(row));
  }
  WriteCsv(path, config, header, rows);
}

}  // namespace tokmarg
