// Copyright 2026 The mcattn Authors
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

#include <cmath>
#include <span>
#include <vector>

#include "mcattn/attention.hpp"
#include "mcattn/prng.hpp"

namespace mcattn::test {

inline RealMatrix random_matrix(std::size_t rows, std::size_t cols,
                                RandomSource rng, double scale = 1.0) {
  RealMatrix out(rows, cols);
  rng.fill_standard_normal(out.data());
  for (double& v : out.data()) v *= scale;
  return out;
}

inline AttentionInputs random_inputs(std::size_t n, std::size_t m, std::size_t d,
                                     RandomSource rng, double scale = 1.0) {
  return AttentionInputs(random_matrix(n, d, rng.split(0), scale),
                         random_matrix(m, d, rng.split(1), scale),
                         random_matrix(m, d, rng.split(2), scale));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline std::vector<double> scaled_to_norm(std::vector<double> v, double norm) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double factor = norm / std::sqrt(sq);
  for (double& x : v) x *= factor;
  return v;
}

}  // namespace mcattn::test
