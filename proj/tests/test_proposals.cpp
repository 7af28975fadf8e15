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
#include <numbers>
#include <stdexcept>

#include <doctest.h>

#include "mcattn/proposals.hpp"
#include "test_util.hpp"

using namespace mcattn;

namespace {

constexpr ProposalKind kAllKinds[] = {
    ProposalKind::MixturePerSegment, ProposalKind::GaussianFullKeys,
    ProposalKind::GaussianLocal, ProposalKind::GaussianKeyLandmarkAttn};

// Naive mixture log-density: direct sum of weighted Gaussian pdfs.
double naive_mixture_logpdf(const MixtureDensity& density,
                            std::span<const double> omega) {
  double pdf = 0.0;
  for (std::size_t m = 0; m < density.components(); ++m) {
    pdf += density.weights.weights[m] *
           std::exp(gaussian_logpdf_identity_cov(omega, density.means[m]));
  }
  return std::log(pdf);
}

}  // namespace

TEST_CASE("compute_landmarks segmentation rules") {
  RandomSource rng(91);
  // N = 4, C = 2: halves.
  const AttentionInputs four = test::random_inputs(4, 4, 3, rng);
  const Landmarks half = compute_landmarks(four, 2);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(half.query_landmarks[0][d] ==
          doctest::Approx(0.5 * (four.Q(0, d) + four.Q(1, d))).epsilon(1e-15));
    CHECK(half.query_landmarks[1][d] ==
          doctest::Approx(0.5 * (four.Q(2, d) + four.Q(3, d))).epsilon(1e-15));
  }

  // N = 5, C = 2: remainder goes to the first segment.
  const AttentionInputs five = test::random_inputs(5, 5, 2, rng.split(1));
  const Landmarks uneven = compute_landmarks(five, 2);
  CHECK(uneven.query_segments[0] == std::pair<std::size_t, std::size_t>{0, 3});
  CHECK(uneven.query_segments[1] == std::pair<std::size_t, std::size_t>{3, 5});

  // C = N: landmarks are the rows themselves.
  const AttentionInputs rows = test::random_inputs(4, 4, 3, rng.split(2));
  const Landmarks singleton = compute_landmarks(rows, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(test::max_abs_diff(singleton.query_landmarks[c], rows.Q.row(c)) == 0.0);
  }

  CHECK_THROWS_AS(compute_landmarks(four, 0), std::invalid_argument);
  CHECK_THROWS_AS(compute_landmarks(four, 5), std::invalid_argument);
}

TEST_CASE("landmark reconstruction of the global mean") {
  RandomSource rng(92);
  const AttentionInputs inputs = test::random_inputs(13, 9, 4, rng);
  const Landmarks landmarks = compute_landmarks(inputs, 5);
  std::vector<double> weighted(4, 0.0);
  for (std::size_t c = 0; c < 5; ++c) {
    const auto [b, e] = landmarks.query_segments[c];
    for (std::size_t d = 0; d < 4; ++d) {
      weighted[d] +=
          static_cast<double>(e - b) * landmarks.query_landmarks[c][d];
    }
  }
  for (std::size_t d = 0; d < 4; ++d) {
    double total = 0.0;
    for (std::size_t n = 0; n < 13; ++n) total += inputs.Q(n, d);
    CHECK(std::abs(weighted[d] - total) <= 1e-10);
  }
}

TEST_CASE("build_proposals reference structure per kind") {
  RandomSource rng(93);
  // GaussianLocal with C = 1: mean(Q) + mean(K).
  const AttentionInputs inputs = test::random_inputs(6, 5, 3, rng);
  const Landmarks single = compute_landmarks(inputs, 1);
  const ProposalSet local = build_proposals(single, inputs.K, ProposalKind::GaussianLocal);
  for (std::size_t d = 0; d < 3; ++d) {
    double qm = 0.0, km = 0.0;
    for (std::size_t n = 0; n < 6; ++n) qm += inputs.Q(n, d);
    for (std::size_t m = 0; m < 5; ++m) km += inputs.K(m, d);
    CHECK(local.means[0][d] ==
          doctest::Approx(qm / 6.0 + km / 5.0).epsilon(1e-13));
  }

  // GaussianFullKeys with identical keys k: mean = landmark + k.
  AttentionInputs same = test::random_inputs(4, 5, 3, rng.split(1));
  for (std::size_t m = 1; m < 5; ++m) {
    for (std::size_t d = 0; d < 3; ++d) same.K(m, d) = same.K(0, d);
  }
  const Landmarks two = compute_landmarks(same, 2);
  const ProposalSet full =
      build_proposals(two, same.K, ProposalKind::GaussianFullKeys);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(full.means[c][d] ==
            doctest::Approx(two.query_landmarks[c][d] + same.K(0, d))
                .epsilon(1e-12));
    }
  }

  // KeyLandmarkAttn with C = 1 coincides with GaussianLocal.
  const ProposalSet attn =
      build_proposals(single, inputs.K, ProposalKind::GaussianKeyLandmarkAttn);
  CHECK(test::max_abs_diff(attn.means[0], local.means[0]) == 0.0);
}

TEST_CASE("proposal_draw determinism, eval path, and moments") {
  RandomSource rng(94);
  const AttentionInputs inputs = test::random_inputs(8, 8, 3, rng);
  const Landmarks landmarks = compute_landmarks(inputs, 2);
  const ProposalSet set =
      build_proposals(landmarks, inputs.K, ProposalKind::GaussianLocal);

  RandomSource a(5), b(5);
  CHECK(proposal_draw(set, 1, a) == proposal_draw(set, 1, b));
  CHECK_THROWS_AS(proposal_draw(set, 2, a), std::out_of_range);

  // The eval-mode "sample" is exactly the mean.
  CHECK(proposal_mean(set, 0) == set.means[0]);

  // 1e5 draws: sample mean within 4 standard errors of mu per coordinate.
  const std::size_t draws = 100'000;
  std::vector<double> sum(3, 0.0);
  RandomSource draw_rng(6);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto x = proposal_draw(set, 0, draw_rng);
    for (std::size_t d = 0; d < 3; ++d) sum[d] += x[d];
  }
  const double se = 1.0 / std::sqrt(static_cast<double>(draws));
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(std::abs(sum[d] / static_cast<double>(draws) - set.means[0][d]) <=
          4.0 * se);
  }
}

TEST_CASE("proposal_logpdf reference values and mixture oracle") {
  RandomSource rng(95);
  const AttentionInputs inputs = test::random_inputs(6, 6, 2, rng, 0.7);
  const Landmarks landmarks = compute_landmarks(inputs, 3);

  // Gaussian kind at its own mean, D = 2: -ln(2 pi).
  const ProposalSet local =
      build_proposals(landmarks, inputs.K, ProposalKind::GaussianLocal);
  CHECK(proposal_logpdf(local, 1, local.means[1]) ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-13));

  // MixturePerSegment with M = 1 reduces to a single Gaussian.
  const AttentionInputs single_key = test::random_inputs(3, 1, 2, rng.split(1));
  const Landmarks lk = compute_landmarks(single_key, 1);
  const ProposalSet mix1 =
      build_proposals(lk, single_key.K, ProposalKind::MixturePerSegment);
  const auto omega1 = rng.standard_normal(2);
  std::vector<double> mean(2);
  for (std::size_t d = 0; d < 2; ++d) {
    mean[d] = lk.query_landmarks[0][d] + single_key.K(0, d);
  }
  CHECK(proposal_logpdf(mix1, 0, omega1) ==
        doctest::Approx(gaussian_logpdf_identity_cov(omega1, mean))
            .epsilon(1e-13));

  // Random probes against the naive mixture evaluation.
  const ProposalSet mix =
      build_proposals(landmarks, inputs.K, ProposalKind::MixturePerSegment);
  RandomSource probe = rng.split(2);
  for (int rep = 0; rep < 30; ++rep) {
    const auto omega = probe.standard_normal(2);
    const double fast = proposal_logpdf(mix, rep % 3, omega);
    const double naive = naive_mixture_logpdf(mix.mixtures[rep % 3], omega);
    CHECK(fast == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("proposal densities integrate to 1 at D = 1") {
  RandomSource rng(96);
  const AttentionInputs inputs = test::random_inputs(6, 6, 1, rng, 0.5);
  const Landmarks landmarks = compute_landmarks(inputs, 2);
  for (ProposalKind kind : kAllKinds) {
    const ProposalSet set = build_proposals(landmarks, inputs.K, kind);
    for (std::size_t c = 0; c < set.size(); ++c) {
      const std::size_t grid = 9601;
      const double lo = -12.0, hi = 12.0;
      const double step = (hi - lo) / static_cast<double>(grid - 1);
      double integral = 0.0;
      for (std::size_t i = 0; i < grid; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double p = std::exp(proposal_logpdf(set, c, std::span(&x, 1)));
        integral += (i == 0 || i == grid - 1) ? 0.5 * p : p;
      }
      integral *= step;
      INFO("kind = ", to_string(kind), ", c = ", c);
      CHECK(std::abs(integral - 1.0) <= 1e-3);
    }
  }
}

TEST_CASE("mixture proposal draws follow the component pick then noise") {
  RandomSource rng(97);
  const AttentionInputs inputs = test::random_inputs(4, 3, 2, rng);
  const Landmarks landmarks = compute_landmarks(inputs, 2);
  const ProposalSet set =
      build_proposals(landmarks, inputs.K, ProposalKind::MixturePerSegment);
  RandomSource a(11), b(11);
  const auto draw = proposal_draw(set, 0, a);
  const std::size_t component = categorical_draw(set.mixtures[0].weights, b);
  const auto expected = gaussian_draw(set.mixtures[0].means[component], b);
  CHECK(draw == expected);
}
