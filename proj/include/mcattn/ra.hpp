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

namespace mcattn {

/// Per-query sampling distribution of randomized attention: an identity
/// covariance Gaussian mixture whose component m has weight
/// softmax_m(q_n . k) and mean q_n + k_m. log_normalizer is
/// logsumexp_m(q_n . k_m), the log of the kernel-form partition function.
struct MixtureDensity {
  ProbabilityVector weights;
  std::vector<std::vector<double>> means;
  double log_normalizer = 0.0;

  std::size_t components() const { return means.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

  /// log p(omega) via the mixture form: logsumexp over components of
  /// log pi_m + log N(omega; mean_m, I).
  double logpdf(std::span<const double> omega) const;

  /// Mixture expectation sum_m pi_m mean_m.
  std::vector<double> mean() const;

  /// Draws one sample: categorical component pick, then mean + noise.
  std::vector<double> draw(RandomSource& rng) const;
};

/// Gaussian mixture induced by a single probe vector against all keys:
/// weights softmax_m(probe . k_m), means probe + k_m. This is the RA density
/// when probe = q_n and the per-segment proposal when probe is a landmark.
MixtureDensity make_key_mixture(std::span<const double> probe, const RealMatrix& K);

/// The sampling density for query n. Throws std::out_of_range for n >= N.
MixtureDensity ra_density(const AttentionInputs& inputs, std::size_t n);

/// log p_n(omega) via the unnormalized kernel form:
/// log N(omega;0,I) + log xi(q_n,omega) + logsumexp_m log xi(k_m,omega)
/// - log_normalizer. Equal to MixtureDensity::logpdf by completing the
/// square; kept as an independent route for verification.
double ra_logpdf_kernel_form(const AttentionInputs& inputs, std::size_t n,
                             std::span<const double> omega);

/// The aggregation  f_n(omega) = [xi(q_n,w) sum_m xi(k_m,w) v_m] /
/// [xi(q_n,w) sum_m xi(k_m,w)]. The query factor cancels exactly, so this
/// evaluates softmax_m(omega . k_m - ||k_m||^2/2) applied to V.
std::vector<double> ra_value_aggregate(const AttentionInputs& inputs, std::size_t n,
                                       std::span<const double> omega);

enum class RaVariant { Unbiased, Biased };
enum class EstimatorMode { Train, Eval };

struct RaConfig {
  std::size_t samples = 1;  // S
  RaVariant variant = RaVariant::Unbiased;
  EstimatorMode mode = EstimatorMode::Train;
  RandomSource rng{0};
};

/// Randomized attention. Per query n (stream-id = base ^ n, so results are
/// independent of evaluation order):
///   Unbiased:     omega = q_n + k_a + eps, a ~ Categorical(pi_n),
///                 eps ~ N(0,I); unbiased for softmax attention.
///   Biased/Train: omega = q_n + K^T pi_n + eps (mixture mean replaces the
///                 categorical pick).
///   Biased/Eval:  omega = q_n + K^T pi_n, deterministically.
/// Output row = (1/S) sum_s f_n(omega_s). O(N M) time.
///
/// Unbiased + Eval is rejected as invalid-argument: replacing both random
/// variables by expectations is not a defined mode for the unbiased variant.
AttentionOutput ra_attention(const AttentionInputs& inputs, const RaConfig& cfg);

}  // namespace mcattn
