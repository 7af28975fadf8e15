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

#include "mcattn/rfa.hpp"
#include "test_util.hpp"

using namespace mcattn;

namespace {

double rmse(const RealMatrix& a, const RealMatrix& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(a.data().size()));
}

}  // namespace

TEST_CASE("rfa single key is exact for any seed and sample count") {
  RandomSource rng(61);
  const AttentionInputs inputs = test::random_inputs(6, 1, 4, rng);
  for (std::uint64_t seed : {0ULL, 7ULL, 99ULL}) {
    RfaConfig cfg;
    cfg.samples = 3;
    cfg.rng = RandomSource(seed);
    const AttentionOutput out = rfa_attention(inputs, cfg);
    for (std::size_t n = 0; n < 6; ++n) {
      CHECK(test::max_abs_diff(out.Y.row(n), inputs.V.row(0)) <= 1e-12);
    }
  }
}

TEST_CASE("rfa with zero queries and keys returns the value mean") {
  RandomSource rng(62);
  AttentionInputs inputs = test::random_inputs(4, 5, 3, rng);
  for (double& v : inputs.Q.data()) v = 0.0;
  for (double& v : inputs.K.data()) v = 0.0;
  RfaConfig cfg;
  cfg.samples = 9;
  cfg.rng = RandomSource(123);
  const AttentionOutput out = rfa_attention(inputs, cfg);
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (std::size_t m = 0; m < 5; ++m) mean += inputs.V(m, d);
    mean /= 5.0;
    for (std::size_t n = 0; n < 4; ++n) {
      CHECK(out.Y(n, d) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("rfa approaches the exact oracle at large sample counts") {
  RandomSource rng(63);
  const AttentionInputs inputs = test::random_inputs(8, 8, 4, rng, 0.5);
  const AttentionOutput oracle = softmax_attention(inputs);
  RfaConfig cfg;
  cfg.samples = 10'000;
  cfg.rng = RandomSource(7);
  const AttentionOutput out = rfa_attention(inputs, cfg);
  CHECK(rmse(out.Y, oracle.Y) <= 0.05);
}

TEST_CASE("rfa consistency: seed-averaged RMSE shrinks with S") {
  RandomSource rng(64);
  const AttentionInputs inputs = test::random_inputs(8, 8, 4, rng, 0.5);
  const AttentionOutput oracle = softmax_attention(inputs);
  const std::size_t grid[] = {16, 64, 256, 1024, 4096};
  const std::size_t seeds = 20;
  std::vector<double> mean_rmse;
  for (std::size_t s : grid) {
    double total = 0.0;
    for (std::size_t seed = 0; seed < seeds; ++seed) {
      RfaConfig cfg;
      cfg.samples = s;
      cfg.rng = RandomSource(1000 + seed);
      total += rmse(rfa_attention(inputs, cfg).Y, oracle.Y);
    }
    mean_rmse.push_back(total / static_cast<double>(seeds));
  }
  std::size_t inversions = 0;
  for (std::size_t i = 1; i < mean_rmse.size(); ++i) {
    if (mean_rmse[i] > mean_rmse[i - 1]) ++inversions;
  }
  CHECK(inversions <= 1);
}

TEST_CASE("rfa is linear in V under a fixed seed") {
  RandomSource rng(65);
  AttentionInputs base = test::random_inputs(5, 6, 3, rng);
  RealMatrix v2 = test::random_matrix(6, 3, rng.split(9));
  const double a = 2.25, b = -0.75;
  AttentionInputs combined = base;
  for (std::size_t i = 0; i < combined.V.data().size(); ++i) {
    combined.V.data()[i] = a * base.V.data()[i] + b * v2.data()[i];
  }
  AttentionInputs second = base;
  second.V = v2;
  RfaConfig cfg;
  cfg.samples = 33;
  cfg.rng = RandomSource(5);
  const AttentionOutput lhs = rfa_attention(combined, cfg);
  const AttentionOutput y1 = rfa_attention(base, cfg);
  const AttentionOutput y2 = rfa_attention(second, cfg);
  for (std::size_t i = 0; i < lhs.Y.data().size(); ++i) {
    CHECK(std::abs(lhs.Y.data()[i] - a * y1.Y.data()[i] - b * y2.Y.data()[i]) <=
          1e-10);
  }
}

TEST_CASE("rfa convex hull for positive map kinds") {
  RandomSource rng(66);
  for (FeatureMapKind kind :
       {FeatureMapKind::PositiveScalar, FeatureMapKind::HyperbolicPair}) {
    AttentionInputs inputs = test::random_inputs(6, 7, 4, rng.split(int(kind)));
    for (double& v : inputs.V.data()) v = std::abs(v) - std::floor(std::abs(v));
    RfaConfig cfg;
    cfg.samples = 25;
    cfg.kind = kind;
    cfg.rng = RandomSource(17);
    const AttentionOutput out = rfa_attention(inputs, cfg);
    for (double v : out.Y.data()) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("rfa trig kinds run and stay consistent at large S") {
  RandomSource rng(67);
  const AttentionInputs inputs = test::random_inputs(6, 6, 4, rng, 0.4);
  const AttentionOutput oracle = softmax_attention(inputs);
  for (FeatureMapKind kind :
       {FeatureMapKind::TrigPair, FeatureMapKind::ShiftedCosine}) {
    RfaConfig cfg;
    cfg.samples = 20'000;
    cfg.kind = kind;
    cfg.rng = RandomSource(29);
    const AttentionOutput out = rfa_attention(inputs, cfg);
    INFO("kind = ", to_string(kind));
    CHECK(rmse(out.Y, oracle.Y) <= 0.1);
  }
}

TEST_CASE("rfa determinism and validation") {
  RandomSource rng(68);
  const AttentionInputs inputs = test::random_inputs(4, 5, 3, rng);
  RfaConfig cfg;
  cfg.samples = 12;
  cfg.rng = RandomSource(3);
  CHECK(rfa_attention(inputs, cfg).Y.data() == rfa_attention(inputs, cfg).Y.data());
  cfg.samples = 0;
  CHECK_THROWS_AS(rfa_attention(inputs, cfg), std::invalid_argument);
}
