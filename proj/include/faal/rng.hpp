// Copyright 2026 The FAAL Desk Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace faal {

// SplitMix64 generator. All derived distributions (uniform, normal, gamma,
// shuffles) are implemented here on top of the raw 64-bit stream, so a seed
// yields the same draws on every platform and standard library. The
// <random> distributions are implementation-defined and are not used.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller. Draws two uniforms per call; the second
  // variate is discarded so that the stream position depends only on the
  // number of calls.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);

  // Dirichlet(alpha, ..., alpha) of the given dimension.
  std::vector<double> dirichlet(std::size_t dim, double alpha);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // Independent child stream; advances this generator by one draw.
  SeededRng split();

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace faal
