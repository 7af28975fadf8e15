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

#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "mcattn/attention.hpp"
#include "mcattn/data.hpp"
#include "test_util.hpp"

using namespace mcattn;

namespace {

// Independent oracle: scalar double loop, no shared code with the library
// row pipeline.
RealMatrix naive_attention(const AttentionInputs& in) {
  const std::size_t n_q = in.queries(), n_k = in.keys(), d = in.dim();
  RealMatrix out(n_q, d);
  for (std::size_t n = 0; n < n_q; ++n) {
    double denom = 0.0;
    std::vector<double> weights(n_k);
    double max_logit = -1e308;
    for (std::size_t m = 0; m < n_k; ++m) {
      double logit = 0.0;
      for (std::size_t j = 0; j < d; ++j) logit += in.Q(n, j) * in.K(m, j);
      weights[m] = logit;
      max_logit = std::max(max_logit, logit);
    }
    for (std::size_t m = 0; m < n_k; ++m) {
      weights[m] = std::exp(weights[m] - max_logit);
      denom += weights[m];
    }
    for (std::size_t m = 0; m < n_k; ++m) {
      for (std::size_t j = 0; j < d; ++j) {
        out(n, j) += weights[m] / denom * in.V(m, j);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("softmax_attention degenerate shapes") {
  RandomSource rng(51);
  // Single key: every row equals v_1.
  AttentionInputs single = test::random_inputs(5, 1, 3, rng);
  const AttentionOutput out = softmax_attention(single);
  for (std::size_t n = 0; n < 5; ++n) {
    CHECK(test::max_abs_diff(out.Y.row(n), single.V.row(0)) == 0.0);
  }

  // Identical keys: every row equals the column mean of V.
  AttentionInputs same = test::random_inputs(4, 6, 3, rng.split(1));
  for (std::size_t m = 1; m < 6; ++m) {
    for (std::size_t d = 0; d < 3; ++d) same.K(m, d) = same.K(0, d);
  }
  const AttentionOutput uniform = softmax_attention(same);
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (std::size_t m = 0; m < 6; ++m) mean += same.V(m, d);
    mean /= 6.0;
    for (std::size_t n = 0; n < 4; ++n) {
      CHECK(uniform.Y(n, d) == doctest::Approx(mean).epsilon(1e-13));
    }
  }
}

TEST_CASE("softmax_attention double-loop oracle") {
  RandomSource rng(52);
  const AttentionInputs inputs = test::random_inputs(4, 5, 3, rng);
  const AttentionOutput out = softmax_attention(inputs);
  const RealMatrix expected = naive_attention(inputs);
  CHECK(test::max_abs_diff(out.Y.data(), expected.data()) <= 1e-12);
}

TEST_CASE("attention_probs reference values and recomputation") {
  RandomSource rng(53);
  // Equal logits give the uniform vector.
  AttentionInputs inputs = test::random_inputs(2, 5, 3, rng);
  for (std::size_t d = 0; d < 3; ++d) inputs.Q(0, d) = 0.0;
  auto p = attention_probs(inputs, 0);
  for (double w : p.weights) CHECK(w == doctest::Approx(0.2).epsilon(1e-13));

  // Two keys, logit gap ln 3 -> [0.75, 0.25].
  AttentionInputs pair(RealMatrix::from_rows({{1.0}}),
                       RealMatrix::from_rows({{std::log(3.0)}, {0.0}}),
                       RealMatrix::from_rows({{1.0}, {2.0}}));
  p = attention_probs(pair, 0);
  CHECK(p.weights[0] == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(p.weights[1] == doctest::Approx(0.25).epsilon(1e-13));

  // Random instance matches the explicitly materialized logit row.
  const AttentionInputs random = test::random_inputs(6, 7, 4, rng.split(1));
  for (std::size_t n = 0; n < 6; ++n) {
    std::vector<double> logits(7);
    for (std::size_t m = 0; m < 7; ++m) {
      logits[m] = dot(random.Q.row(n), random.K.row(m));
    }
    const auto expected = stable_softmax(logits);
    CHECK(test::max_abs_diff(attention_probs(random, n).weights,
                             expected.weights) == 0.0);
  }

  CHECK_THROWS_AS(attention_probs(random, 6), std::out_of_range);
}

TEST_CASE("attention outputs live in the convex hull of V") {
  RandomSource rng(54);
  AttentionInputs inputs = test::random_inputs(8, 9, 4, rng);
  for (double& v : inputs.V.data()) v = std::abs(v) - std::floor(std::abs(v));
  const AttentionOutput out = softmax_attention(inputs);
  for (double v : out.Y.data()) {
    CHECK(v >= -1e-15);
    CHECK(v <= 1.0 + 1e-15);
  }
}

TEST_CASE("attention_probs shift invariance in the keys") {
  RandomSource rng(55);
  AttentionInputs inputs = test::random_inputs(5, 6, 3, rng);
  AttentionInputs shifted = inputs;
  const std::vector<double> c{0.7, -1.1, 0.4};
  for (std::size_t m = 0; m < 6; ++m) {
    for (std::size_t d = 0; d < 3; ++d) shifted.K(m, d) += c[d];
  }
  for (std::size_t n = 0; n < 5; ++n) {
    CHECK(test::max_abs_diff(attention_probs(inputs, n).weights,
                             attention_probs(shifted, n).weights) <= 1e-12);
  }
}

TEST_CASE("query scaling contract is bit-exact") {
  RandomSource rng(56);
  const AttentionInputs raw = test::random_inputs(4, 5, 9, rng);
  AttentionInputs manual = raw;
  const double factor = 1.0 / std::sqrt(9.0);
  for (double& v : manual.Q.data()) v *= factor;
  manual.prescaled = true;

  const AttentionInputs scaled = scale_queries(raw);
  CHECK(scaled.prescaled);
  CHECK(scaled.Q.data() == manual.Q.data());
  CHECK(softmax_attention(scaled).Y.data() == softmax_attention(manual).Y.data());

  // Already prescaled inputs pass through untouched.
  const AttentionInputs again = scale_queries(scaled);
  CHECK(again.Q.data() == scaled.Q.data());
}

TEST_CASE("AttentionInputs validation") {
  CHECK_THROWS_AS(AttentionInputs(RealMatrix(2, 3), RealMatrix(2, 4),
                                  RealMatrix(2, 4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(AttentionInputs(RealMatrix(2, 3), RealMatrix(2, 3),
                                  RealMatrix(3, 3)),
                  std::invalid_argument);
  RealMatrix bad(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(AttentionInputs(bad, RealMatrix(2, 2), RealMatrix(2, 2)),
                  std::invalid_argument);
}
