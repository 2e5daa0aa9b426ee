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

#ifndef TOKMARG_SCORER_H_
#define TOKMARG_SCORER_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokmarg {

// Sentinel appended to every externally scored token sequence so that the
// document probability includes the end-of-document prediction.
inline constexpr std::string_view kEosToken = "</s>";

struct TokenScores {
  std::vector<double> logprobs;  // log P(t_i | t_<i), one per token
  double eos_logprob = 0.0;      // log P(EOS | t_1..t_n)

  double Total() const {
    double sum = eos_logprob;
    for (double v : logprobs) sum += v;
    return sum;
  }
};

// Autoregressive token scorer P_theta(t_i | t_<i).
class Scorer {
 public:
  virtual ~Scorer() = default;

  // One result per sequence, in input order.
  virtual std::vector<TokenScores> ScoreBatch(
      std::span<const std::vector<std::string>> batch) = 0;

  // True if ScoreBatch may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

}  // namespace tokmarg

#endif  // TOKMARG_SCORER_H_
