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

#include "mcattn/feature_maps.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mcattn/errors.hpp"
#include "mcattn/matrix.hpp"

namespace mcattn {
namespace {

double guarded_exp(double exponent) {
  if (exponent > kMaxExponent) {
    throw OverflowError(
        "feature map exponent " + std::to_string(exponent) + " exceeds " +
            std::to_string(kMaxExponent) + "; inputs are too large for exp()",
        exponent);
  }
  return std::exp(exponent);
}

void require_same_dim(std::span<const double> x, const FeatureSample& sample) {
  if (x.size() != sample.omega.size()) {
    throw std::invalid_argument("xi: input and omega dimensions differ");
  }
}

}  // namespace

std::size_t feature_arity(FeatureMapKind kind) {
  switch (kind) {
    case FeatureMapKind::PositiveScalar:
    case FeatureMapKind::ShiftedCosine:
      return 1;
    case FeatureMapKind::HyperbolicPair:
    case FeatureMapKind::TrigPair:
      return 2;
  }
  throw std::invalid_argument("feature_arity: unknown kind");
}

bool is_positive_kind(FeatureMapKind kind) {
  return kind == FeatureMapKind::PositiveScalar ||
         kind == FeatureMapKind::HyperbolicPair;
}

const char* to_string(FeatureMapKind kind) {
  switch (kind) {
    case FeatureMapKind::PositiveScalar: return "positive";
    case FeatureMapKind::HyperbolicPair: return "hyperbolic";
    case FeatureMapKind::TrigPair: return "trig";
    case FeatureMapKind::ShiftedCosine: return "shifted-cosine";
  }
  return "?";
}

FeatureMapKind parse_feature_map_kind(const std::string& name) {
  if (name == "positive") return FeatureMapKind::PositiveScalar;
  if (name == "hyperbolic") return FeatureMapKind::HyperbolicPair;
  if (name == "trig") return FeatureMapKind::TrigPair;
  if (name == "shifted-cosine") return FeatureMapKind::ShiftedCosine;
  throw std::invalid_argument("unknown feature map kind: " + name);
}

FeatureSample draw_feature_sample(FeatureMapKind kind, std::size_t dim,
                                  RandomSource& rng) {
  FeatureSample sample;
  sample.omega = rng.standard_normal(dim);
  if (kind == FeatureMapKind::ShiftedCosine) {
    sample.shift = 2.0 * std::numbers::pi * rng.next_uniform();
  }
  return sample;
}

FeatureValue xi(FeatureMapKind kind, std::span<const double> x,
                const FeatureSample& sample) {
  require_same_dim(x, sample);
  const double t = dot(sample.omega, x);
  const double half_sq = 0.5 * squared_norm(x);
  FeatureValue out;
  switch (kind) {
    case FeatureMapKind::PositiveScalar:
      out.arity = 1;
      out.v[0] = guarded_exp(t - half_sq);
      return out;
    case FeatureMapKind::HyperbolicPair: {
      out.arity = 2;
      constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;
      out.v[0] = kInvSqrt2 * guarded_exp(t - half_sq);
      out.v[1] = kInvSqrt2 * guarded_exp(-t - half_sq);
      return out;
    }
    case FeatureMapKind::TrigPair: {
      out.arity = 2;
      const double scale = guarded_exp(half_sq);
      out.v[0] = scale * std::sin(t);
      out.v[1] = scale * std::cos(t);
      return out;
    }
    case FeatureMapKind::ShiftedCosine:
      out.arity = 1;
      out.v[0] = std::numbers::sqrt2 * guarded_exp(half_sq) * std::cos(t + sample.shift);
      return out;
  }
  throw std::invalid_argument("xi: unknown kind");
}

double log_xi_positive(std::span<const double> x, const FeatureSample& sample) {
  require_same_dim(x, sample);
  return dot(sample.omega, x) - 0.5 * squared_norm(x);
}

namespace {

// Single-sample product xi(x,w)^T xi(y,w), written in terms of the dot
// products it actually needs so the big sample loops stay allocation-free.
double sample_product(FeatureMapKind kind, double t_x, double t_y, double half_sq_x,
                      double half_sq_y, double shift) {
  switch (kind) {
    case FeatureMapKind::PositiveScalar:
      return guarded_exp(t_x + t_y - half_sq_x - half_sq_y);
    case FeatureMapKind::HyperbolicPair: {
      const double u = t_x + t_y;
      const double c = half_sq_x + half_sq_y;
      return 0.5 * (guarded_exp(u - c) + guarded_exp(-u - c));
    }
    case FeatureMapKind::TrigPair:
      // sin a sin b + cos a cos b = cos(a - b)
      return guarded_exp(half_sq_x + half_sq_y) * std::cos(t_x - t_y);
    case FeatureMapKind::ShiftedCosine:
      return 2.0 * guarded_exp(half_sq_x + half_sq_y) * std::cos(t_x + shift) *
             std::cos(t_y + shift);
  }
  throw std::invalid_argument("kernel_estimate: unknown kind");
}

}  // namespace

namespace {

// Accumulates the sample sum and sum of squares of xi(x,w)^T xi(y,w).
void kernel_sample_sums(FeatureMapKind kind, std::span<const double> x,
                        std::span<const double> y, std::size_t samples,
                        RandomSource& rng, double& sum, double& sum_sq) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel_estimate: x and y dimensions differ");
  }
  const double half_sq_x = 0.5 * squared_norm(x);
  const double half_sq_y = 0.5 * squared_norm(y);
  const bool shifted = kind == FeatureMapKind::ShiftedCosine;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::vector<double> omega(x.size());
  sum = 0.0;
  sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    rng.fill_standard_normal(omega);
    const double shift = shifted ? kTwoPi * rng.next_uniform() : 0.0;
    const double t_x = dot(omega, x);
    const double t_y = dot(omega, y);
    const double value = sample_product(kind, t_x, t_y, half_sq_x, half_sq_y, shift);
    sum += value;
    sum_sq += value * value;
  }
}

}  // namespace

KernelEstimate kernel_estimate_stats(FeatureMapKind kind, std::span<const double> x,
                                     std::span<const double> y, std::size_t samples,
                                     RandomSource rng) {
  if (samples < 2) {
    throw std::invalid_argument("kernel_estimate_stats: needs samples >= 2");
  }
  double sum = 0.0, sum_sq = 0.0;
  kernel_sample_sums(kind, x, y, samples, rng, sum, sum_sq);
  const double n = static_cast<double>(samples);
  KernelEstimate est;
  est.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0));
  est.standard_error = std::sqrt(var / n);
  return est;
}

double kernel_estimate(FeatureMapKind kind, std::span<const double> x,
                       std::span<const double> y, std::size_t samples,
                       RandomSource rng) {
  if (samples == 0) {
    throw std::invalid_argument("kernel_estimate: needs samples >= 1");
  }
  double sum = 0.0, sum_sq = 0.0;
  kernel_sample_sums(kind, x, y, samples, rng, sum, sum_sq);
  return sum / static_cast<double>(samples);
}

}  // namespace mcattn
