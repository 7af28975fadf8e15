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

#include "mcattn/rfa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mcattn/errors.hpp"

namespace mcattn {
namespace {

// Per-(sample, component) key statistics with the largest key exponent
// factored out: mass = sum_m exp(log xi_j(k_m) - log_scale) and
// value[d] = sum_m exp(log xi_j(k_m) - log_scale) * V(m, d).
struct ScaledKeyStat {
  double log_scale = 0.0;
  double mass = 0.0;
  std::vector<double> value;
};

// log xi_j for the positive kinds: component j of the map in log space.
double log_xi_component(FeatureMapKind kind, double t, double half_sq,
                        std::size_t j) {
  constexpr double kHalfLog2 = 0.34657359027997264;  // ln(2)/2
  if (kind == FeatureMapKind::PositiveScalar) return t - half_sq;
  // HyperbolicPair carries the 1/sqrt(2) factor in log space.
  return (j == 0 ? t : -t) - half_sq - kHalfLog2;
}

AttentionOutput rfa_positive(const AttentionInputs& inputs, const RfaConfig& cfg) {
  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();
  const std::size_t arity = feature_arity(cfg.kind);
  const std::size_t n_samples = cfg.samples;

  std::vector<double> key_half_sq(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) {
    key_half_sq[m] = 0.5 * squared_norm(inputs.K.row(m));
  }

  // Precompute per-sample key statistics once; reused by every query.
  std::vector<std::vector<double>> omegas(n_samples);
  std::vector<ScaledKeyStat> stats(n_samples * arity);
  std::vector<double> key_log_xi(n_keys);
  for (std::size_t s = 0; s < n_samples; ++s) {
    RandomSource rng = cfg.rng.split(s);
    omegas[s] = rng.standard_normal(dim);
    for (std::size_t j = 0; j < arity; ++j) {
      for (std::size_t m = 0; m < n_keys; ++m) {
        key_log_xi[m] =
            log_xi_component(cfg.kind, dot(omegas[s], inputs.K.row(m)),
                             key_half_sq[m], j);
      }
      ScaledKeyStat& stat = stats[s * arity + j];
      stat.log_scale = *std::max_element(key_log_xi.begin(), key_log_xi.end());
      stat.value.assign(dim, 0.0);
      for (std::size_t m = 0; m < n_keys; ++m) {
        const double w = std::exp(key_log_xi[m] - stat.log_scale);
        stat.mass += w;
        const auto value = inputs.V.row(m);
        for (std::size_t d = 0; d < dim; ++d) stat.value[d] += w * value[d];
      }
    }
  }

  AttentionOutput out{RealMatrix(n_queries, dim)};
  std::vector<double> log_terms(n_samples * arity);
  std::vector<double> numerator(dim);
  for (std::size_t n = 0; n < n_queries; ++n) {
    const auto query = inputs.Q.row(n);
    const double query_half_sq = 0.5 * squared_norm(query);
    for (std::size_t s = 0; s < n_samples; ++s) {
      const double t = dot(omegas[s], query);
      for (std::size_t j = 0; j < arity; ++j) {
        log_terms[s * arity + j] =
            log_xi_component(cfg.kind, t, query_half_sq, j) +
            stats[s * arity + j].log_scale;
      }
    }
    const double top = *std::max_element(log_terms.begin(), log_terms.end());
    double denominator = 0.0;
    std::fill(numerator.begin(), numerator.end(), 0.0);
    for (std::size_t i = 0; i < log_terms.size(); ++i) {
      const double w = std::exp(log_terms[i] - top);
      denominator += w * stats[i].mass;
      for (std::size_t d = 0; d < dim; ++d) numerator[d] += w * stats[i].value[d];
    }
    if (!(denominator >= kDenominatorFloor)) {
      throw DegeneracyError(
          "rfa_attention: degenerate denominator at query " + std::to_string(n), n);
    }
    auto y = out.Y.row(n);
    for (std::size_t d = 0; d < dim; ++d) y[d] = numerator[d] / denominator;
  }
  return out;
}

AttentionOutput rfa_trig(const AttentionInputs& inputs, const RfaConfig& cfg) {
  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();
  const std::size_t arity = feature_arity(cfg.kind);
  const std::size_t n_samples = cfg.samples;

  // Signed feature values: plain accumulation, overflow guard inside xi().
  std::vector<FeatureSample> samples(n_samples);
  std::vector<double> mass(n_samples * arity, 0.0);
  std::vector<std::vector<double>> value(n_samples * arity,
                                         std::vector<double>(dim, 0.0));
  for (std::size_t s = 0; s < n_samples; ++s) {
    RandomSource rng = cfg.rng.split(s);
    samples[s] = draw_feature_sample(cfg.kind, dim, rng);
    for (std::size_t m = 0; m < n_keys; ++m) {
      const FeatureValue fk = xi(cfg.kind, inputs.K.row(m), samples[s]);
      const auto v = inputs.V.row(m);
      for (std::size_t j = 0; j < arity; ++j) {
        mass[s * arity + j] += fk.v[j];
        for (std::size_t d = 0; d < dim; ++d) {
          value[s * arity + j][d] += fk.v[j] * v[d];
        }
      }
    }
  }

  AttentionOutput out{RealMatrix(n_queries, dim)};
  std::vector<double> numerator(dim);
  for (std::size_t n = 0; n < n_queries; ++n) {
    double denominator = 0.0;
    std::fill(numerator.begin(), numerator.end(), 0.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
      const FeatureValue fq = xi(cfg.kind, inputs.Q.row(n), samples[s]);
      for (std::size_t j = 0; j < arity; ++j) {
        denominator += fq.v[j] * mass[s * arity + j];
        for (std::size_t d = 0; d < dim; ++d) {
          numerator[d] += fq.v[j] * value[s * arity + j][d];
        }
      }
    }
    if (!(std::abs(denominator) >= kDenominatorFloor)) {
      throw DegeneracyError(
          "rfa_attention: degenerate denominator at query " + std::to_string(n), n);
    }
    auto y = out.Y.row(n);
    for (std::size_t d = 0; d < dim; ++d) y[d] = numerator[d] / denominator;
  }
  return out;
}

}  // namespace

AttentionOutput rfa_attention(const AttentionInputs& inputs, const RfaConfig& cfg) {
  inputs.validate();
  if (cfg.samples == 0) {
    throw std::invalid_argument("rfa_attention: needs samples >= 1");
  }
  if (is_positive_kind(cfg.kind)) return rfa_positive(inputs, cfg);
  return rfa_trig(inputs, cfg);
}

}  // namespace mcattn
