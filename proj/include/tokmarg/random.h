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

#ifndef TOKMARG_RANDOM_H_
#define TOKMARG_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace tokmarg {

// SplitMix64 finalizer; used to derive independent stream seeds.
inline uint64_t MixBits(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the stream identified by (global seed, document, stream tag).
// Streams are independent of the order in which documents are processed.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t document, uint64_t stream) {
  return MixBits(MixBits(MixBits(seed) ^ document) ^ (stream * 0xD6E8FEB86659FD93ULL));
}

// Deterministic generator. Uniform variates are built from the raw 64-bit
// output so the stream is identical on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double Uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard Gumbel(0, 1).
  double Gumbel() { return -std::log(-std::log(Uniform())); }

  uint64_t NextU64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tokmarg

#endif  // TOKMARG_RANDOM_H_
