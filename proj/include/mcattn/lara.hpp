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

#include "mcattn/feature_maps.hpp"
#include "mcattn/weighting.hpp"

namespace mcattn {

struct LaraConfig {
  std::size_t proposals = 16;  // C
  ProposalKind proposal_kind = ProposalKind::GaussianLocal;
  WeightingConfig weighting{};
  EstimatorMode mode = EstimatorMode::Train;
  FeatureMapKind feature_map = FeatureMapKind::PositiveScalar;
  RandomSource rng{0};

  // Degenerate configurations that recover shared-sample attention: force
  // every proposal mean to zero and/or fix alpha_nc to the constant 1/C.
  // With both set, the estimator coincides with rfa_attention on the same
  // draws.
  bool pin_proposals_to_standard_normal = false;
  bool constant_uniform_weights = false;
};

/// Everything lara_attention computes on the way to its output, captured so
/// the weighting pipeline can be inspected and the output re-derived:
/// recombining contribution with the scaled key statistics reproduces
/// `output` bit for bit.
struct LaraDiagnostics {
  // Per proposal c.
  std::vector<std::vector<double>> draws;  // omega_c
  std::vector<double> key_log_scale;       // L_c, factored key max exponent
  RealMatrix scaled_key_value;             // C x D: sum_m exp(.-L_c) v_m
  std::vector<double> scaled_key_mass;     // sum_m exp(. - L_c)

  // Per query n.
  RealMatrix alpha_prime;     // N x C: alpha_nc N(w_c;0,I)/q_c(w_c)
  RealMatrix log_importance;  // N x C: log xi(q_n, w_c) + L_c
  RealMatrix contribution;    // N x C: signed weight on the scaled stats
  std::vector<double> log_scale;    // T_n factored out of contributions
  std::vector<double> denominator;  // sum_c contribution * mass (scaled)

  RealMatrix output;  // N x D
};

/// Linear randomized attention: one sample from each of C proposals, shared
/// key-value statistics, and self-normalized MIS combination with
/// query-specific weights. O(C M + C N) time; never materializes N x M.
///
/// Train mode draws omega_c from proposal c (stream cfg.rng.split(c)); Eval
/// mode passes the proposal mean deterministically. Requires the
/// PositiveScalar feature map — the density form behind the estimator is
/// derived for that mapping — and rejects other kinds as invalid-argument.
///
/// Signed weighting corrections are accumulated by splitting positive and
/// negative parts against a common factored scale; a combined denominator
/// below 1e-30 (post-factoring) raises DegeneracyError with the query index.
AttentionOutput lara_attention(const AttentionInputs& inputs, const LaraConfig& cfg);

/// Runs the identical computation under the identical seed and returns every
/// intermediate quantity.
LaraDiagnostics lara_diagnostics(const AttentionInputs& inputs,
                                 const LaraConfig& cfg);

}  // namespace mcattn
