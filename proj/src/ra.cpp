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

#include "mcattn/ra.hpp"

#include <cmath>
#include <stdexcept>

namespace mcattn {

double MixtureDensity::logpdf(std::span<const double> omega) const {
  std::vector<double> component_log(means.size());
  for (std::size_t m = 0; m < means.size(); ++m) {
    component_log[m] = std::log(weights.weights[m]) +
                       gaussian_logpdf_identity_cov(omega, means[m]);
  }
  return logsumexp(component_log);
}

std::vector<double> MixtureDensity::mean() const {
  std::vector<double> out(dim(), 0.0);
  for (std::size_t m = 0; m < means.size(); ++m) {
    for (std::size_t d = 0; d < out.size(); ++d) {
      out[d] += weights.weights[m] * means[m][d];
    }
  }
  return out;
}

std::vector<double> MixtureDensity::draw(RandomSource& rng) const {
  const std::size_t component = categorical_draw(weights, rng);
  return gaussian_draw(means[component], rng);
}

MixtureDensity make_key_mixture(std::span<const double> probe, const RealMatrix& K) {
  const std::size_t n_keys = K.rows();
  std::vector<double> logits(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) logits[m] = dot(probe, K.row(m));

  MixtureDensity density;
  density.log_normalizer = logsumexp(logits);
  density.weights = stable_softmax(logits);
  density.means.resize(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) {
    density.means[m].resize(probe.size());
    const auto key = K.row(m);
    for (std::size_t d = 0; d < probe.size(); ++d) {
      density.means[m][d] = probe[d] + key[d];
    }
  }
  return density;
}

MixtureDensity ra_density(const AttentionInputs& inputs, std::size_t n) {
  if (n >= inputs.queries()) {
    throw std::out_of_range("ra_density: query index out of range");
  }
  return make_key_mixture(inputs.Q.row(n), inputs.K);
}

double ra_logpdf_kernel_form(const AttentionInputs& inputs, std::size_t n,
                             std::span<const double> omega) {
  if (n >= inputs.queries()) {
    throw std::out_of_range("ra_logpdf_kernel_form: query index out of range");
  }
  const auto query = inputs.Q.row(n);
  std::vector<double> key_logits(inputs.keys());
  std::vector<double> key_log_xi(inputs.keys());
  for (std::size_t m = 0; m < inputs.keys(); ++m) {
    const auto key = inputs.K.row(m);
    key_logits[m] = dot(query, key);
    key_log_xi[m] = dot(omega, key) - 0.5 * squared_norm(key);
  }
  const double log_xi_query = dot(omega, query) - 0.5 * squared_norm(query);
  return standard_normal_logpdf(omega) + log_xi_query + logsumexp(key_log_xi) -
         logsumexp(key_logits);
}

std::vector<double> ra_value_aggregate(const AttentionInputs& inputs, std::size_t n,
                                       std::span<const double> omega) {
  if (n >= inputs.queries()) {
    throw std::out_of_range("ra_value_aggregate: query index out of range");
  }
  if (omega.size() != inputs.dim()) {
    throw std::invalid_argument("ra_value_aggregate: omega dimension mismatch");
  }
  const std::size_t n_keys = inputs.keys();
  std::vector<double> logits(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) {
    const auto key = inputs.K.row(m);
    logits[m] = dot(omega, key) - 0.5 * squared_norm(key);
  }
  const ProbabilityVector probs = stable_softmax(logits);
  std::vector<double> out(inputs.dim(), 0.0);
  for (std::size_t m = 0; m < n_keys; ++m) {
    const double w = probs.weights[m];
    const auto value = inputs.V.row(m);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * value[d];
  }
  return out;
}

namespace {

// softmax_m(omega . k_m - ||k_m||^2/2) applied to V, with key square norms
// precomputed once per ra_attention call.
void aggregate_into(const AttentionInputs& inputs,
                    const std::vector<double>& key_half_sq,
                    std::span<const double> omega, std::vector<double>& logits,
                    std::span<double> out) {
  const std::size_t n_keys = inputs.keys();
  for (std::size_t m = 0; m < n_keys; ++m) {
    logits[m] = dot(omega, inputs.K.row(m)) - key_half_sq[m];
  }
  const ProbabilityVector probs = stable_softmax(logits);
  for (std::size_t m = 0; m < n_keys; ++m) {
    const double w = probs.weights[m];
    const auto value = inputs.V.row(m);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * value[d];
  }
}

}  // namespace

AttentionOutput ra_attention(const AttentionInputs& inputs, const RaConfig& cfg) {
  inputs.validate();
  if (cfg.samples == 0) {
    throw std::invalid_argument("ra_attention: needs samples >= 1");
  }
  if (cfg.variant == RaVariant::Unbiased && cfg.mode == EstimatorMode::Eval) {
    throw std::invalid_argument(
        "ra_attention: eval mode is defined for the biased variant only");
  }

  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();

  std::vector<double> key_half_sq(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) {
    key_half_sq[m] = 0.5 * squared_norm(inputs.K.row(m));
  }

  AttentionOutput out{RealMatrix(n_queries, dim)};
  std::vector<double> logits(n_keys);
  std::vector<double> omega(dim);
  std::vector<double> mixture_mean(dim);
  std::vector<double> accum(dim);
  for (std::size_t n = 0; n < n_queries; ++n) {
    RandomSource rng = cfg.rng.with_stream(cfg.rng.stream() ^ n);
    const ProbabilityVector probs = attention_probs(inputs, n);
    const auto query = inputs.Q.row(n);

    if (cfg.variant == RaVariant::Biased) {
      // Mixture mean q_n + K^T pi_n replaces the categorical draw.
      for (std::size_t d = 0; d < dim; ++d) mixture_mean[d] = query[d];
      for (std::size_t m = 0; m < n_keys; ++m) {
        const double w = probs.weights[m];
        const auto key = inputs.K.row(m);
        for (std::size_t d = 0; d < dim; ++d) mixture_mean[d] += w * key[d];
      }
    }

    std::fill(accum.begin(), accum.end(), 0.0);
    if (cfg.variant == RaVariant::Biased && cfg.mode == EstimatorMode::Eval) {
      aggregate_into(inputs, key_half_sq, mixture_mean, logits, accum);
    } else {
      for (std::size_t s = 0; s < cfg.samples; ++s) {
        if (cfg.variant == RaVariant::Unbiased) {
          const std::size_t a = categorical_draw(probs, rng);
          rng.fill_standard_normal(omega);
          const auto key = inputs.K.row(a);
          for (std::size_t d = 0; d < dim; ++d) omega[d] += query[d] + key[d];
        } else {
          rng.fill_standard_normal(omega);
          for (std::size_t d = 0; d < dim; ++d) omega[d] += mixture_mean[d];
        }
        aggregate_into(inputs, key_half_sq, omega, logits, accum);
      }
      const double inv = 1.0 / static_cast<double>(cfg.samples);
      for (double& v : accum) v *= inv;
    }
    auto y = out.Y.row(n);
    for (std::size_t d = 0; d < dim; ++d) y[d] = accum[d];
  }
  return out;
}

}  // namespace mcattn
