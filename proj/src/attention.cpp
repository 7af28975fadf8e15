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

#include "mcattn/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace mcattn {

AttentionInputs::AttentionInputs(RealMatrix q, RealMatrix k, RealMatrix v,
                                 bool prescaled)
    : Q(std::move(q)), K(std::move(k)), V(std::move(v)), prescaled(prescaled) {
  validate();
}

void AttentionInputs::validate() const {
  if (Q.rows() == 0 || K.rows() == 0) {
    throw std::invalid_argument("AttentionInputs: need N >= 1 and M >= 1");
  }
  if (Q.cols() != K.cols() || Q.cols() != V.cols()) {
    throw std::invalid_argument("AttentionInputs: Q, K, V column counts differ");
  }
  if (K.rows() != V.rows()) {
    throw std::invalid_argument("AttentionInputs: K and V row counts differ");
  }
  if (!Q.all_finite() || !K.all_finite() || !V.all_finite()) {
    throw std::invalid_argument("AttentionInputs: non-finite entry");
  }
}

AttentionOutput softmax_attention(const AttentionInputs& inputs) {
  inputs.validate();
  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();

  AttentionOutput out{RealMatrix(n_queries, dim)};
  std::vector<double> logits(n_keys);
  for (std::size_t n = 0; n < n_queries; ++n) {
    const auto query = inputs.Q.row(n);
    for (std::size_t m = 0; m < n_keys; ++m) logits[m] = dot(query, inputs.K.row(m));
    const ProbabilityVector probs = stable_softmax(logits);
    auto y = out.Y.row(n);
    for (std::size_t m = 0; m < n_keys; ++m) {
      const double w = probs.weights[m];
      const auto value = inputs.V.row(m);
      for (std::size_t d = 0; d < dim; ++d) y[d] += w * value[d];
    }
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("softmax_attention: non-finite intermediate");
      }
    }
  }
  return out;
}

ProbabilityVector attention_probs(const AttentionInputs& inputs, std::size_t n) {
  if (n >= inputs.queries()) {
    throw std::out_of_range("attention_probs: query index out of range");
  }
  const auto query = inputs.Q.row(n);
  std::vector<double> logits(inputs.keys());
  for (std::size_t m = 0; m < logits.size(); ++m) {
    logits[m] = dot(query, inputs.K.row(m));
  }
  return stable_softmax(logits);
}

}  // namespace mcattn
