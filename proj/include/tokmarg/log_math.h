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

#ifndef TOKMARG_LOG_MATH_H_
#define TOKMARG_LOG_MATH_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace tokmarg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)).
inline double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(sum_i exp(x_i)), accumulated in the given order. A single finite
// element is returned unchanged.
inline double LogSumExp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// log(1 - exp(x)) for x <= 0.
inline double Log1mExp(double x) {
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

}  // namespace tokmarg

#endif  // TOKMARG_LOG_MATH_H_
