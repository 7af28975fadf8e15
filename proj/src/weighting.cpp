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

#include "mcattn/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcattn/errors.hpp"
#include "mcattn/feature_maps.hpp"

namespace mcattn {

const char* to_string(WeightingKind kind) {
  switch (kind) {
    case WeightingKind::BalanceHeuristic: return "balance";
    case WeightingKind::CoupledOptimal: return "coupled";
    case WeightingKind::DecoupledOptimal: return "decoupled";
  }
  return "?";
}

WeightingKind parse_weighting_kind(const std::string& name) {
  if (name == "balance") return WeightingKind::BalanceHeuristic;
  if (name == "coupled") return WeightingKind::CoupledOptimal;
  if (name == "decoupled") return WeightingKind::DecoupledOptimal;
  throw std::invalid_argument("unknown weighting kind: " + name);
}

void WeightingConfig::validate() const {
  if (!std::isfinite(beta) || beta < 0.0) {
    throw std::invalid_argument("WeightingConfig: beta must be finite and >= 0");
  }
}

QueryAffinity query_affinity(const RealMatrix& Q, const Landmarks& landmarks) {
  const std::size_t n_queries = Q.rows();
  const std::size_t proposals = landmarks.proposals;
  QueryAffinity out{RealMatrix(n_queries, proposals)};
  std::vector<double> logits(proposals);
  for (std::size_t n = 0; n < n_queries; ++n) {
    const auto query = Q.row(n);
    for (std::size_t c = 0; c < proposals; ++c) {
      logits[c] = dot(query, landmarks.query_landmarks[c]);
    }
    const ProbabilityVector probs = stable_softmax(logits);
    for (std::size_t c = 0; c < proposals; ++c) {
      out.r_prime(n, c) = probs.weights[c];
    }
  }
  return out;
}

std::vector<double> mis_weights(const WeightingConfig& cfg, const ProposalSet& set,
                                const QueryAffinity& affinity, std::size_t n,
                                std::span<const double> omega) {
  cfg.validate();
  const std::size_t proposals = set.size();
  if (n >= affinity.r_prime.rows()) {
    throw std::out_of_range("mis_weights: query index out of range");
  }
  if (affinity.r_prime.cols() != proposals) {
    throw std::invalid_argument("mis_weights: affinity / proposal count mismatch");
  }

  std::vector<double> log_density(proposals);
  for (std::size_t c = 0; c < proposals; ++c) {
    log_density[c] = proposal_logpdf(set, c, omega);
  }
  const double max_log =
      *std::max_element(log_density.begin(), log_density.end());
  if (max_log < -kMaxExponent) {
    throw DegeneracyError(
        "mis_weights: every proposal density underflows at the probe point");
  }
  const double lse = logsumexp(log_density);

  std::vector<double> alpha(proposals);
  for (std::size_t c = 0; c < proposals; ++c) {
    alpha[c] = std::exp(log_density[c] - lse);  // balance heuristic share
  }
  switch (cfg.kind) {
    case WeightingKind::BalanceHeuristic:
      return alpha;
    case WeightingKind::CoupledOptimal: {
      // Correction scaled by the raw density q_c(omega); its weighted mean
      // (under the balance shares) is subtracted so the sum stays 1.
      double balance_weighted_affinity = 0.0;
      for (std::size_t c = 0; c < proposals; ++c) {
        balance_weighted_affinity += alpha[c] * affinity.r_prime(n, c);
      }
      for (std::size_t c = 0; c < proposals; ++c) {
        alpha[c] += std::exp(log_density[c]) *
                    (affinity.r_prime(n, c) - balance_weighted_affinity);
      }
      return alpha;
    }
    case WeightingKind::DecoupledOptimal: {
      double mean_affinity = 0.0;
      for (std::size_t c = 0; c < proposals; ++c) {
        mean_affinity += affinity.r_prime(n, c);
      }
      mean_affinity /= static_cast<double>(proposals);
      for (std::size_t c = 0; c < proposals; ++c) {
        alpha[c] += cfg.beta * (affinity.r_prime(n, c) - mean_affinity);
      }
      return alpha;
    }
  }
  throw std::invalid_argument("mis_weights: unknown kind");
}

}  // namespace mcattn
