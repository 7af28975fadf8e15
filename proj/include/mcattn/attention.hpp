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

#include "mcattn/math.hpp"
#include "mcattn/matrix.hpp"

namespace mcattn {

/// The (Q, K, V) triple. Q is N x D, K and V are M x D. `prescaled` records
/// whether the 1/sqrt(D) factor has already been folded into Q; the library
/// itself never rescales — ingestion code owns that (see data.hpp).
struct AttentionInputs {
  RealMatrix Q;
  RealMatrix K;
  RealMatrix V;
  bool prescaled = false;

  AttentionInputs() = default;
  AttentionInputs(RealMatrix q, RealMatrix k, RealMatrix v, bool prescaled = false);

  std::size_t queries() const { return Q.rows(); }  // N
  std::size_t keys() const { return K.rows(); }     // M
  std::size_t dim() const { return Q.cols(); }      // D

  /// Throws std::invalid_argument unless all column counts agree, N,M >= 1
  /// and every entry is finite.
  void validate() const;
};

struct AttentionOutput {
  RealMatrix Y;  // N x D
};

/// Exact softmax attention: row n is sum_m softmax_m(q_n . k_m) v_m, with a
/// numerically stable per-row softmax. O(N M D) time, O(M) transient space.
AttentionOutput softmax_attention(const AttentionInputs& inputs);

/// The length-M softmax row for query n (the mixture component weights used
/// by the sampling estimators). Throws std::out_of_range for n >= N.
ProbabilityVector attention_probs(const AttentionInputs& inputs, std::size_t n);

}  // namespace mcattn
