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

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "mcattn/prng.hpp"

namespace mcattn {

/// Randomized mappings xi(x, omega) whose inner products are unbiased
/// estimates of the exponential kernel exp(x.y) under omega ~ N(0, I).
///
/// PositiveScalar:  exp(omega.x - ||x||^2/2)                            (l=1)
/// HyperbolicPair:  exp(-||x||^2/2)/sqrt(2) * [exp(omega.x), exp(-omega.x)]
///                                                                      (l=2)
/// TrigPair:        exp(||x||^2/2) * [sin(omega.x), cos(omega.x)]       (l=2)
/// ShiftedCosine:   sqrt(2) exp(||x||^2/2) cos(omega.x + b),
///                  b ~ Uniform[0, 2pi)                                 (l=1)
///
/// Only the positive kinds (PositiveScalar, HyperbolicPair) admit the
/// mixture-density machinery used by the sampling estimators; the trig kinds
/// are usable in shared-sample attention only.
enum class FeatureMapKind { PositiveScalar, HyperbolicPair, TrigPair, ShiftedCosine };

/// Output arity l of the mapping.
std::size_t feature_arity(FeatureMapKind kind);

bool is_positive_kind(FeatureMapKind kind);

const char* to_string(FeatureMapKind kind);
FeatureMapKind parse_feature_map_kind(const std::string& name);

/// One draw of the mapping's randomness: omega ~ N(0, I), plus the phase
/// shift b (meaningful for ShiftedCosine only).
struct FeatureSample {
  std::vector<double> omega;
  double shift = 0.0;
};

FeatureSample draw_feature_sample(FeatureMapKind kind, std::size_t dim,
                                  RandomSource& rng);

/// Value of a mapping: at most two slots, `arity` of them meaningful.
struct FeatureValue {
  std::array<double, 2> v{0.0, 0.0};
  std::size_t arity = 1;
};

/// Exponents above this magnitude are refused rather than silently turned
/// into inf (64-bit exp() overflows just past 709).
constexpr double kMaxExponent = 700.0;

/// Evaluates the mapping. Throws std::invalid_argument on dimension mismatch
/// and OverflowError when an exponent exceeds kMaxExponent.
FeatureValue xi(FeatureMapKind kind, std::span<const double> x,
                const FeatureSample& sample);

/// log of the PositiveScalar map: omega.x - ||x||^2/2. Exact in log space,
/// never overflows for finite inputs.
double log_xi_positive(std::span<const double> x, const FeatureSample& sample);

/// Monte Carlo estimate of exp(x.y): (1/S) sum_s xi(x,w_s)^T xi(y,w_s).
double kernel_estimate(FeatureMapKind kind, std::span<const double> x,
                       std::span<const double> y, std::size_t samples,
                       RandomSource rng);

struct KernelEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// As kernel_estimate, but also reports the estimated standard error of the
/// sample mean (requires samples >= 2).
KernelEstimate kernel_estimate_stats(FeatureMapKind kind, std::span<const double> x,
                                     std::span<const double> y, std::size_t samples,
                                     RandomSource rng);

}  // namespace mcattn
