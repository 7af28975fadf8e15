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

#include "mcattn/attention.hpp"
#include "mcattn/feature_maps.hpp"

namespace mcattn {

struct RfaConfig {
  std::size_t samples = 64;  // S
  FeatureMapKind kind = FeatureMapKind::PositiveScalar;
  RandomSource rng{0};
};

/// Random feature attention: draws S samples shared by every query,
/// pre-computes the key-value statistics once, and evaluates each query
/// against them. Biased for the attention output as a whole but consistent.
/// O(S (N + M) D) time; never materializes an N x M matrix.
///
/// Sample s uses the derived stream cfg.rng.split(s), so results do not
/// depend on evaluation order. Positive map kinds are accumulated with the
/// per-sample max factored out in log space; the trig kinds (signed values)
/// accumulate directly under the overflow guard.
///
/// Throws DegeneracyError naming the query when a self-normalization
/// denominator falls below 1e-30 (post-factoring).
AttentionOutput rfa_attention(const AttentionInputs& inputs, const RfaConfig& cfg);

constexpr double kDenominatorFloor = 1e-30;

}  // namespace mcattn
