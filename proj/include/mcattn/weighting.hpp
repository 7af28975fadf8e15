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

#include <string>

#include "mcattn/proposals.hpp"

namespace mcattn {

/// Multiple-importance-sampling weighting functions alpha_nc. Every kind
/// sums to 1 over c at any common evaluation point — the exact condition for
/// MIS unbiasedness:
///   BalanceHeuristic:  alpha_c = q_c(w) / sum_c' q_c'(w)
///   CoupledOptimal:    balance + q_c(w) (r'_nc - sum_j balance_j r'_nj)
///   DecoupledOptimal:  balance + beta (r'_nc - mean_c r'_nc)
/// The correction terms sum to zero, may be negative, and carry the
/// query-specific affinity r'.
enum class WeightingKind { BalanceHeuristic, CoupledOptimal, DecoupledOptimal };

const char* to_string(WeightingKind kind);
WeightingKind parse_weighting_kind(const std::string& name);

struct WeightingConfig {
  WeightingKind kind = WeightingKind::DecoupledOptimal;
  double beta = 1.0;  // DecoupledOptimal correction strength; >= 0, finite

  void validate() const;
};

/// r'_nc: per query, softmax over c of (q_n . q~_c) — how much proposal c
/// favors query n. Rows sum to 1.
struct QueryAffinity {
  RealMatrix r_prime;  // N x C
};

QueryAffinity query_affinity(const RealMatrix& Q, const Landmarks& landmarks);

/// [alpha_n1(omega), ..., alpha_nC(omega)] at the single common point omega.
/// Densities are evaluated through proposal_logpdf with one shared logsumexp
/// for the balance term. Throws DegeneracyError when every proposal density
/// underflows at omega (max log-density < -700).
std::vector<double> mis_weights(const WeightingConfig& cfg, const ProposalSet& set,
                                const QueryAffinity& affinity, std::size_t n,
                                std::span<const double> omega);

}  // namespace mcattn
