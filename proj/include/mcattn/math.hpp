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

#include <span>
#include <vector>

#include "mcattn/prng.hpp"

namespace mcattn {

/// Discrete distribution: non-negative weights summing to 1 within 1e-12.
struct ProbabilityVector {
  std::vector<double> weights;

  static constexpr double kSumTolerance = 1e-12;

  std::size_t size() const { return weights.size(); }

  /// Throws std::invalid_argument when empty, non-finite, negative, or not
  /// normalized within kSumTolerance.
  void validate() const;
};

/// ln sum exp(logits), computed with max-subtraction. Throws
/// std::invalid_argument on empty or non-finite input.
double logsumexp(std::span<const double> logits);

/// Softmax with max-subtraction; output sums to 1 within 1e-12. Same error
/// contract as logsumexp.
ProbabilityVector stable_softmax(std::span<const double> logits);

/// Index m with probability weights[m], via inverse CDF over cumulative sums
/// with strict upper-bound comparison. Validates the weights.
std::size_t categorical_draw(const ProbabilityVector& weights, RandomSource& rng);

/// mean + standard normal noise, one independent coordinate per dimension.
std::vector<double> gaussian_draw(std::span<const double> mean, RandomSource& rng);

/// log N(x; mean, I) = -(D/2) ln(2 pi) - ||x - mean||^2 / 2. Throws on
/// dimension mismatch.
double gaussian_logpdf_identity_cov(std::span<const double> x,
                                    std::span<const double> mean);

/// log N(x; 0, I).
double standard_normal_logpdf(std::span<const double> x);

}  // namespace mcattn
