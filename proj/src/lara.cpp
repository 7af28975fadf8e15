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

#include "mcattn/lara.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mcattn/errors.hpp"
#include "mcattn/rfa.hpp"

namespace mcattn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One signed exponential term of alpha'_nc: sign * exp(log_magnitude), kept
// in log space until a common scale is known.
struct SignedLogTerm {
  double log_magnitude = kNegInf;
  double sign = 1.0;
};

AttentionOutput lara_compute(const AttentionInputs& inputs, const LaraConfig& cfg,
                             LaraDiagnostics* diag) {
  inputs.validate();
  cfg.weighting.validate();
  if (cfg.feature_map != FeatureMapKind::PositiveScalar) {
    throw std::invalid_argument(
        "lara_attention: only the positive scalar feature map admits the "
        "density form this estimator relies on");
  }
  const std::size_t n_queries = inputs.queries();
  const std::size_t n_keys = inputs.keys();
  const std::size_t dim = inputs.dim();
  const std::size_t proposals = cfg.proposals;
  if (proposals < 1 || proposals > std::min(n_queries, n_keys)) {
    throw std::invalid_argument(
        "lara_attention: proposal count must satisfy 1 <= C <= min(N, M)");
  }

  const Landmarks landmarks = compute_landmarks(inputs, proposals);
  ProposalSet set = build_proposals(landmarks, inputs.K, cfg.proposal_kind);
  if (cfg.pin_proposals_to_standard_normal) {
    if (!set.is_gaussian()) {
      throw std::invalid_argument(
          "lara_attention: pinning to the standard normal requires a Gaussian "
          "proposal kind");
    }
    for (auto& mean : set.means) std::fill(mean.begin(), mean.end(), 0.0);
  }

  std::vector<double> key_half_sq(n_keys);
  for (std::size_t m = 0; m < n_keys; ++m) {
    key_half_sq[m] = 0.5 * squared_norm(inputs.K.row(m));
  }

  // Per-proposal draw and key statistics (the largest key exponent factored
  // out), plus the density ratios feeding alpha'.
  std::vector<std::vector<double>> draws(proposals);
  std::vector<double> key_log_scale(proposals);            // L_c
  RealMatrix scaled_key_value(proposals, dim);             // per c: sum exp() v
  std::vector<double> scaled_key_mass(proposals, 0.0);     // per c: sum exp()
  std::vector<double> log_normal_at_draw(proposals);       // log N(w_c; 0, I)
  std::vector<double> log_self_density(proposals);         // log q_c(w_c)
  std::vector<double> log_density_sum(proposals);          // lse_c' q_c'(w_c)
  RealMatrix balance(proposals, proposals);                // at w_c over c'

  const bool needs_balance = !cfg.constant_uniform_weights;
  std::vector<double> key_logits(n_keys);
  std::vector<double> point_log_density(proposals);
  for (std::size_t c = 0; c < proposals; ++c) {
    if (cfg.mode == EstimatorMode::Eval) {
      draws[c] = proposal_mean(set, c);
    } else {
      RandomSource rng = cfg.rng.split(c);
      draws[c] = proposal_draw(set, c, rng);
    }
    const auto& omega = draws[c];

    for (std::size_t m = 0; m < n_keys; ++m) {
      key_logits[m] = dot(omega, inputs.K.row(m)) - key_half_sq[m];
    }
    key_log_scale[c] = *std::max_element(key_logits.begin(), key_logits.end());
    auto stat = scaled_key_value.row(c);
    for (std::size_t m = 0; m < n_keys; ++m) {
      const double w = std::exp(key_logits[m] - key_log_scale[c]);
      scaled_key_mass[c] += w;
      const auto value = inputs.V.row(m);
      for (std::size_t d = 0; d < dim; ++d) stat[d] += w * value[d];
    }

    log_normal_at_draw[c] = standard_normal_logpdf(omega);
    log_self_density[c] = proposal_logpdf(set, c, omega);
    if (needs_balance) {
      for (std::size_t j = 0; j < proposals; ++j) {
        point_log_density[j] =
            j == c ? log_self_density[c] : proposal_logpdf(set, j, omega);
      }
      const double max_log =
          *std::max_element(point_log_density.begin(), point_log_density.end());
      if (max_log < -kMaxExponent) {
        throw DegeneracyError(
            "lara_attention: every proposal density underflows at sample " +
            std::to_string(c));
      }
      log_density_sum[c] = logsumexp(point_log_density);
      for (std::size_t j = 0; j < proposals; ++j) {
        balance(c, j) = std::exp(point_log_density[j] - log_density_sum[c]);
      }
    }
  }

  QueryAffinity affinity;
  if (needs_balance) affinity = query_affinity(inputs.Q, landmarks);
  const double log_uniform = -std::log(static_cast<double>(proposals));

  AttentionOutput out{RealMatrix(n_queries, dim)};
  if (diag != nullptr) {
    diag->draws = draws;
    diag->key_log_scale = key_log_scale;
    diag->scaled_key_value = scaled_key_value;
    diag->scaled_key_mass = scaled_key_mass;
    diag->alpha_prime = RealMatrix(n_queries, proposals);
    diag->log_importance = RealMatrix(n_queries, proposals);
    diag->contribution = RealMatrix(n_queries, proposals);
    diag->log_scale.assign(n_queries, 0.0);
    diag->denominator.assign(n_queries, 0.0);
  }

  std::vector<double> log_importance(proposals);  // g_nc
  std::vector<SignedLogTerm> balance_term(proposals);
  std::vector<SignedLogTerm> correction_term(proposals);
  std::vector<double> numerator(dim);
  for (std::size_t n = 0; n < n_queries; ++n) {
    const auto query = inputs.Q.row(n);
    const double query_half_sq = 0.5 * squared_norm(query);

    double mean_affinity = 0.0;
    if (needs_balance && cfg.weighting.kind == WeightingKind::DecoupledOptimal) {
      for (std::size_t j = 0; j < proposals; ++j) {
        mean_affinity += affinity.r_prime(n, j);
      }
      mean_affinity /= static_cast<double>(proposals);
    }

    double top = kNegInf;
    for (std::size_t c = 0; c < proposals; ++c) {
      log_importance[c] =
          dot(draws[c], query) - query_half_sq + key_log_scale[c];

      // alpha'_nc = alpha_nc(w_c) N(w_c;0,I) / q_c(w_c), split into the
      // positive balance piece and a signed correction piece.
      SignedLogTerm& bal = balance_term[c];
      SignedLogTerm& corr = correction_term[c];
      corr = SignedLogTerm{};
      if (cfg.constant_uniform_weights) {
        bal.log_magnitude =
            log_uniform + log_normal_at_draw[c] - log_self_density[c];
        bal.sign = 1.0;
      } else {
        bal.log_magnitude = log_normal_at_draw[c] - log_density_sum[c];
        bal.sign = 1.0;
        double value = 0.0;
        double log_ratio = 0.0;
        switch (cfg.weighting.kind) {
          case WeightingKind::BalanceHeuristic:
            break;
          case WeightingKind::CoupledOptimal: {
            double inner = 0.0;
            for (std::size_t j = 0; j < proposals; ++j) {
              inner += balance(c, j) * affinity.r_prime(n, j);
            }
            value = affinity.r_prime(n, c) - inner;
            // q_c(w_c) cancels against the alpha' density ratio.
            log_ratio = log_normal_at_draw[c];
            break;
          }
          case WeightingKind::DecoupledOptimal:
            value = cfg.weighting.beta * (affinity.r_prime(n, c) - mean_affinity);
            log_ratio = log_normal_at_draw[c] - log_self_density[c];
            break;
        }
        if (value != 0.0) {
          corr.log_magnitude = std::log(std::abs(value)) + log_ratio;
          corr.sign = value > 0.0 ? 1.0 : -1.0;
        }
      }
      top = std::max(top, bal.log_magnitude + log_importance[c]);
      if (corr.log_magnitude != kNegInf) {
        top = std::max(top, corr.log_magnitude + log_importance[c]);
      }
    }

    // Combine against the common scale: positive and negative parts of the
    // denominator accumulate separately so cancellation is visible.
    double den_pos = 0.0;
    double den_neg = 0.0;
    std::fill(numerator.begin(), numerator.end(), 0.0);
    for (std::size_t c = 0; c < proposals; ++c) {
      double weight =
          balance_term[c].sign *
          std::exp(balance_term[c].log_magnitude + log_importance[c] - top);
      if (correction_term[c].log_magnitude != kNegInf) {
        weight += correction_term[c].sign *
                  std::exp(correction_term[c].log_magnitude +
                           log_importance[c] - top);
      }
      if (weight >= 0.0) {
        den_pos += weight * scaled_key_mass[c];
      } else {
        den_neg += -weight * scaled_key_mass[c];
      }
      const auto stat = scaled_key_value.row(c);
      for (std::size_t d = 0; d < dim; ++d) numerator[d] += weight * stat[d];

      if (diag != nullptr) {
        diag->contribution(n, c) = weight;
        diag->log_importance(n, c) = log_importance[c];
        double alpha_prime =
            balance_term[c].sign * std::exp(balance_term[c].log_magnitude);
        if (correction_term[c].log_magnitude != kNegInf) {
          alpha_prime += correction_term[c].sign *
                         std::exp(correction_term[c].log_magnitude);
        }
        diag->alpha_prime(n, c) = alpha_prime;
      }
    }
    const double denominator = den_pos - den_neg;
    if (!(std::abs(denominator) >= kDenominatorFloor)) {
      throw DegeneracyError(
          "lara_attention: degenerate denominator at query " + std::to_string(n),
          n);
    }
    auto y = out.Y.row(n);
    for (std::size_t d = 0; d < dim; ++d) y[d] = numerator[d] / denominator;
    if (diag != nullptr) {
      diag->log_scale[n] = top;
      diag->denominator[n] = denominator;
    }
  }
  if (diag != nullptr) diag->output = out.Y;
  return out;
}

}  // namespace

AttentionOutput lara_attention(const AttentionInputs& inputs, const LaraConfig& cfg) {
  return lara_compute(inputs, cfg, nullptr);
}

LaraDiagnostics lara_diagnostics(const AttentionInputs& inputs,
                                 const LaraConfig& cfg) {
  LaraDiagnostics diag;
  lara_compute(inputs, cfg, &diag);
  return diag;
}

}  // namespace mcattn
