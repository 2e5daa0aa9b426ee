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

#include "tokmarg/ngram.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "tokmarg/error.h"

namespace tokmarg {

size_t NGramModel::ContextHash::operator()(
    const std::vector<TokenId>& key) const {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (TokenId id : key) {
    h ^= static_cast<uint32_t>(id);
    h *= 0x100000001B3ULL;
  }
  return static_cast<size_t>(h);
}

NGramModel NGramModel::Train(const Vocab& vocab,
                             std::span<const std::vector<TokenId>> corpus,
                             int order, double discount) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "no documents");
  if (order < 1) throw Error(ErrorKind::kInvalidArgument, "order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "discount must lie in (0, 1)");
  }
  NGramModel model;
  model.order_ = order;
  model.discount_ = discount;
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id) {
    model.pieces_.push_back(vocab.piece(id));
    model.piece_ids_.emplace(vocab.piece(id), id);
  }
  model.tables_.resize(order);

  const TokenId vocab_size = static_cast<TokenId>(vocab.size());
  std::vector<TokenId> padded;
  int64_t events = 0;
  for (const auto& doc : corpus) {
    padded.assign(order - 1, model.bos());
    for (TokenId id : doc) {
      if (id < 0 || id >= vocab_size) {
        throw Error(ErrorKind::kInvalidArgument,
                    "token id " + std::to_string(id) + " out of range");
      }
      padded.push_back(id);
    }
    padded.push_back(model.eos());
    for (size_t i = order - 1; i < padded.size(); ++i) {
      for (int n = 1; n <= order; ++n) {
        std::vector<TokenId> context(padded.begin() + (i - (n - 1)),
                                     padded.begin() + i);
        ContextStats& stats = model.tables_[n - 1][context];
        ++stats.total;
        ++stats.next[padded[i]];
      }
      ++events;
    }
  }
  if (events == 0) throw Error(ErrorKind::kEmptyCorpus, "no tokens");
  return model;
}

TokenId NGramModel::Lookup(std::string_view piece) const {
  const auto it = piece_ids_.find(std::string(piece));
  if (it == piece_ids_.end()) {
    throw Error(ErrorKind::kUnknownToken, std::string(piece));
  }
  return it->second;
}

double NGramModel::Interpolate(std::span<const TokenId> padded, size_t end,
                               int n, TokenId next) const {
  if (n == 0) return 1.0 / static_cast<double>(num_outcomes());
  const double lower = Interpolate(padded, end, n - 1, next);
  const std::vector<TokenId> context(padded.begin() + (end - (n - 1)),
                                     padded.begin() + end);
  const auto it = tables_[n - 1].find(context);
  if (it == tables_[n - 1].end() || it->second.total == 0) return lower;
  const ContextStats& stats = it->second;
  const auto hit = stats.next.find(next);
  const double count = hit == stats.next.end() ? 0.0 : static_cast<double>(hit->second);
  const double total = static_cast<double>(stats.total);
  const double backoff = discount_ * static_cast<double>(stats.next.size()) / total;
  return std::max(count - discount_, 0.0) / total + backoff * lower;
}

double NGramModel::Prob(std::span<const TokenId> history, TokenId next) const {
  if (next < 0 || next > eos()) {
    throw Error(ErrorKind::kUnknownToken, "id " + std::to_string(next));
  }
  const size_t keep = std::min<size_t>(history.size(), order_ - 1);
  std::vector<TokenId> padded(order_ - 1 - keep, bos());
  padded.insert(padded.end(), history.end() - keep, history.end());
  return Interpolate(padded, padded.size(), order_, next);
}

TokenScores NGramModel::Score(std::span<const TokenId> tokens) const {
  TokenScores scores;
  scores.logprobs.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    scores.logprobs.push_back(LogProb(tokens.first(i), tokens[i]));
  }
  scores.eos_logprob = LogProb(tokens, eos());
  return scores;
}

void NGramModel::Save(std::ostream& out) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["order"] = order_;
  j["discount"] = discount_;
  j["vocab"] = pieces_;
  nlohmann::json contexts = nlohmann::json::array();
  for (int n = 1; n <= order_; ++n) {
    std::vector<std::pair<std::vector<TokenId>, const ContextStats*>> sorted;
    for (const auto& [context, stats] : tables_[n - 1]) {
      sorted.emplace_back(context, &stats);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [context, stats] : sorted) {
      std::vector<std::pair<TokenId, int64_t>> next(stats->next.begin(),
                                                    stats->next.end());
      std::sort(next.begin(), next.end());
      contexts.push_back({{"context", context}, {"next", next}});
    }
  }
  j["contexts"] = std::move(contexts);
  out << j.dump() << '\n';
}

NGramModel NGramModel::Load(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("bad model file: ") + e.what());
  }
  if (j.value("format_version", 0) != 1) {
    throw Error(ErrorKind::kIo, "unsupported model format version");
  }
  NGramModel model;
  model.order_ = j.at("order").get<int>();
  model.discount_ = j.at("discount").get<double>();
  model.pieces_ = j.at("vocab").get<std::vector<std::string>>();
  for (size_t i = 0; i < model.pieces_.size(); ++i) {
    model.piece_ids_.emplace(model.pieces_[i], static_cast<TokenId>(i));
  }
  model.tables_.resize(model.order_);
  for (const auto& entry : j.at("contexts")) {
    auto context = entry.at("context").get<std::vector<TokenId>>();
    const size_t n = context.size() + 1;
    if (n > static_cast<size_t>(model.order_)) {
      throw Error(ErrorKind::kIo, "context longer than the model order");
    }
    ContextStats& stats = model.tables_[n - 1][std::move(context)];
    for (const auto& [id, count] :
         entry.at("next").get<std::vector<std::pair<TokenId, int64_t>>>()) {
      stats.next[id] = count;
      stats.total += count;
    }
  }
  return model;
}

void NGramModel::SaveFile(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  Save(out);
}

NGramModel NGramModel::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open model " + path);
  return Load(in);
}

NGramScorer::NGramScorer(std::shared_ptr<const NGramModel> model,
                         double cache_lambda)
    : model_(std::move(model)), cache_lambda_(cache_lambda) {
  if (!(cache_lambda_ >= 0.0 && cache_lambda_ < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "cache lambda must lie in [0, 1)");
  }
}

TokenScores NGramScorer::Score(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(model_->Lookup(t));
  return ScoreIds(ids);
}

TokenScores NGramScorer::ScoreIds(std::span<const TokenId> tokens) const {
  if (cache_lambda_ == 0.0) return model_->Score(tokens);
  std::unordered_map<TokenId, int64_t> seen;
  auto mixed = [&](size_t i, TokenId next) {
    const double base = model_->Prob(tokens.first(i), next);
    if (i == 0) return std::log(base);
    const auto it = seen.find(next);
    const double cached =
        it == seen.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(i);
    return std::log((1.0 - cache_lambda_) * base + cache_lambda_ * cached);
  };
  TokenScores scores;
  scores.logprobs.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    scores.logprobs.push_back(mixed(i, tokens[i]));
    ++seen[tokens[i]];
  }
  scores.eos_logprob = mixed(tokens.size(), model_->eos());
  return scores;
}

std::vector<TokenScores> NGramScorer::ScoreBatch(
    std::span<const std::vector<std::string>> batch) {
  std::vector<TokenScores> out;
  out.reserve(batch.size());
  for (const auto& tokens : batch) out.push_back(Score(tokens));
  return out;
}

}  // namespace tokmarg
