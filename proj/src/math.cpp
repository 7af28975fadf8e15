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

#include "mcattn/math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mcattn/matrix.hpp"

namespace mcattn {
namespace {

void require_finite_nonempty(std::span<const double> logits, const char* who) {
  if (logits.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty input");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string(who) + ": non-finite entry");
    }
  }
}

}  // namespace

void ProbabilityVector::validate() const {
  if (weights.empty()) {
    throw std::invalid_argument("ProbabilityVector: empty");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("ProbabilityVector: negative or non-finite weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("ProbabilityVector: weights do not sum to 1");
  }
}

double logsumexp(std::span<const double> logits) {
  require_finite_nonempty(logits, "logsumexp");
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max);
  return max + std::log(sum);
}

ProbabilityVector stable_softmax(std::span<const double> logits) {
  require_finite_nonempty(logits, "stable_softmax");
  const double max = *std::max_element(logits.begin(), logits.end());
  ProbabilityVector out;
  out.weights.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.weights[i] = std::exp(logits[i] - max);
    sum += out.weights[i];
  }
  for (double& w : out.weights) w /= sum;
  return out;
}

std::size_t categorical_draw(const ProbabilityVector& weights, RandomSource& rng) {
  weights.validate();
  const double u = rng.next_uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    const double w = weights.weights[m];
    if (w > 0.0) last_positive = m;
    cumulative += w;
    if (u < cumulative) return m;
  }
  // u fell into the rounding gap between the accumulated sum and 1.
  return last_positive;
}

std::vector<double> gaussian_draw(std::span<const double> mean, RandomSource& rng) {
  std::vector<double> out(mean.size());
  rng.fill_standard_normal(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mean[i];
  return out;
}

double gaussian_logpdf_identity_cov(std::span<const double> x,
                                    std::span<const double> mean) {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  }
  constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2 pi)
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    sq += d * d;
  }
  return -0.5 * static_cast<double>(x.size()) * kLogTwoPi - 0.5 * sq;
}

double standard_normal_logpdf(std::span<const double> x) {
  constexpr double kLogTwoPi = 1.8378770664093454836;
  return -0.5 * static_cast<double>(x.size()) * kLogTwoPi - 0.5 * squared_norm(x);
}

}  // namespace mcattn
