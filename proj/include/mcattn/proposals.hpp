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
#include <utility>

#include "mcattn/attention.hpp"
#include "mcattn/ra.hpp"

namespace mcattn {

/// Segment means of the query and key sequences. Queries are split into C
/// contiguous segments over [0, N), keys over [0, M); when the length is not
/// divisible by C the first (length mod C) segments take one extra row.
struct Landmarks {
  std::size_t proposals = 0;  // C
  std::vector<std::vector<double>> query_landmarks;
  std::vector<std::vector<double>> key_landmarks;
  std::vector<std::pair<std::size_t, std::size_t>> query_segments;  // [begin, end)
  std::vector<std::pair<std::size_t, std::size_t>> key_segments;
};

/// Throws std::invalid_argument unless 1 <= C <= min(N, M).
Landmarks compute_landmarks(const AttentionInputs& inputs, std::size_t proposals);

/// The four proposal parameterizations. All are identity-covariance; only
/// the mean structure differs:
///   MixturePerSegment:      the key mixture seeded by the query landmark
///                           (a Gaussian mixture over all M keys).
///   GaussianFullKeys:       mean = q~_c + sum_m softmax(q~_c . k_m) k_m,
///                           O(C M) to build.
///   GaussianLocal:          mean = q~_c + k~_c (the default).
///   GaussianKeyLandmarkAttn: mean = q~_c +
///                           sum_c' softmax(k~_c . k~_c') k~_c', O(C^2).
enum class ProposalKind {
  MixturePerSegment,
  GaussianFullKeys,
  GaussianLocal,
  GaussianKeyLandmarkAttn,
};

const char* to_string(ProposalKind kind);
ProposalKind parse_proposal_kind(const std::string& name);

struct ProposalSet {
  ProposalKind kind = ProposalKind::GaussianLocal;
  std::size_t dim = 0;
  std::vector<std::vector<double>> means;     // Gaussian kinds
  std::vector<MixtureDensity> mixtures;       // MixturePerSegment

  std::size_t size() const {
    return kind == ProposalKind::MixturePerSegment ? mixtures.size() : means.size();
  }
  bool is_gaussian() const { return kind != ProposalKind::MixturePerSegment; }
};

ProposalSet build_proposals(const Landmarks& landmarks, const RealMatrix& K,
                            ProposalKind kind);

/// One sample from proposal c. Throws std::out_of_range for c >= C.
std::vector<double> proposal_draw(const ProposalSet& set, std::size_t c,
                                  RandomSource& rng);

/// Expected value of proposal c (the deterministic eval-mode "sample").
std::vector<double> proposal_mean(const ProposalSet& set, std::size_t c);

/// log q_c(omega).
double proposal_logpdf(const ProposalSet& set, std::size_t c,
                       std::span<const double> omega);

}  // namespace mcattn
