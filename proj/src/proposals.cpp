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

#include "mcattn/proposals.hpp"

#include <algorithm>
#include <stdexcept>

namespace mcattn {
namespace {

// Contiguous segmentation of [0, length) into `count` pieces; the first
// (length mod count) pieces take one extra element.
std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(std::size_t length,
                                                                std::size_t count) {
  std::vector<std::pair<std::size_t, std::size_t>> bounds(count);
  const std::size_t base = length / count;
  const std::size_t remainder = length % count;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t size = base + (c < remainder ? 1 : 0);
    bounds[c] = {begin, begin + size};
    begin += size;
  }
  return bounds;
}

std::vector<double> segment_mean(const RealMatrix& rows,
                                 std::pair<std::size_t, std::size_t> bounds) {
  std::vector<double> mean(rows.cols(), 0.0);
  for (std::size_t r = bounds.first; r < bounds.second; ++r) {
    const auto row = rows.row(r);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(bounds.second - bounds.first);
  for (double& v : mean) v *= inv;
  return mean;
}

void require_index(const ProposalSet& set, std::size_t c, const char* who) {
  if (c >= set.size()) {
    throw std::out_of_range(std::string(who) + ": proposal index out of range");
  }
}

}  // namespace

const char* to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::MixturePerSegment: return "mixture";
    case ProposalKind::GaussianFullKeys: return "full-keys";
    case ProposalKind::GaussianLocal: return "local";
    case ProposalKind::GaussianKeyLandmarkAttn: return "key-landmark-attn";
  }
  return "?";
}

ProposalKind parse_proposal_kind(const std::string& name) {
  if (name == "mixture") return ProposalKind::MixturePerSegment;
  if (name == "full-keys") return ProposalKind::GaussianFullKeys;
  if (name == "local") return ProposalKind::GaussianLocal;
  if (name == "key-landmark-attn") return ProposalKind::GaussianKeyLandmarkAttn;
  throw std::invalid_argument("unknown proposal kind: " + name);
}

Landmarks compute_landmarks(const AttentionInputs& inputs, std::size_t proposals) {
  inputs.validate();
  if (proposals < 1 || proposals > std::min(inputs.queries(), inputs.keys())) {
    throw std::invalid_argument(
        "compute_landmarks: proposal count must satisfy 1 <= C <= min(N, M)");
  }
  Landmarks out;
  out.proposals = proposals;
  out.query_segments = segment_bounds(inputs.queries(), proposals);
  out.key_segments = segment_bounds(inputs.keys(), proposals);
  out.query_landmarks.reserve(proposals);
  out.key_landmarks.reserve(proposals);
  for (std::size_t c = 0; c < proposals; ++c) {
    out.query_landmarks.push_back(segment_mean(inputs.Q, out.query_segments[c]));
    out.key_landmarks.push_back(segment_mean(inputs.K, out.key_segments[c]));
  }
  return out;
}

ProposalSet build_proposals(const Landmarks& landmarks, const RealMatrix& K,
                            ProposalKind kind) {
  const std::size_t proposals = landmarks.proposals;
  if (proposals == 0) {
    throw std::invalid_argument("build_proposals: empty landmarks");
  }
  ProposalSet set;
  set.kind = kind;
  set.dim = landmarks.query_landmarks.front().size();

  switch (kind) {
    case ProposalKind::MixturePerSegment: {
      set.mixtures.reserve(proposals);
      for (std::size_t c = 0; c < proposals; ++c) {
        set.mixtures.push_back(make_key_mixture(landmarks.query_landmarks[c], K));
      }
      return set;
    }
    case ProposalKind::GaussianFullKeys: {
      set.means.reserve(proposals);
      for (std::size_t c = 0; c < proposals; ++c) {
        // The mixture mean: q~_c + sum_m softmax(q~_c . k_m) k_m.
        set.means.push_back(
            make_key_mixture(landmarks.query_landmarks[c], K).mean());
      }
      return set;
    }
    case ProposalKind::GaussianLocal: {
      set.means.resize(proposals);
      for (std::size_t c = 0; c < proposals; ++c) {
        set.means[c].resize(set.dim);
        for (std::size_t d = 0; d < set.dim; ++d) {
          set.means[c][d] =
              landmarks.query_landmarks[c][d] + landmarks.key_landmarks[c][d];
        }
      }
      return set;
    }
    case ProposalKind::GaussianKeyLandmarkAttn: {
      set.means.resize(proposals);
      std::vector<double> logits(proposals);
      for (std::size_t c = 0; c < proposals; ++c) {
        for (std::size_t j = 0; j < proposals; ++j) {
          logits[j] = dot(landmarks.key_landmarks[c], landmarks.key_landmarks[j]);
        }
        const ProbabilityVector attn = stable_softmax(logits);
        set.means[c] = landmarks.query_landmarks[c];
        for (std::size_t j = 0; j < proposals; ++j) {
          const double w = attn.weights[j];
          for (std::size_t d = 0; d < set.dim; ++d) {
            set.means[c][d] += w * landmarks.key_landmarks[j][d];
          }
        }
      }
      return set;
    }
  }
  throw std::invalid_argument("build_proposals: unknown kind");
}

std::vector<double> proposal_draw(const ProposalSet& set, std::size_t c,
                                  RandomSource& rng) {
  require_index(set, c, "proposal_draw");
  if (set.is_gaussian()) return gaussian_draw(set.means[c], rng);
  return set.mixtures[c].draw(rng);
}

std::vector<double> proposal_mean(const ProposalSet& set, std::size_t c) {
  require_index(set, c, "proposal_mean");
  if (set.is_gaussian()) return set.means[c];
  return set.mixtures[c].mean();
}

double proposal_logpdf(const ProposalSet& set, std::size_t c,
                       std::span<const double> omega) {
  require_index(set, c, "proposal_logpdf");
  if (set.is_gaussian()) return gaussian_logpdf_identity_cov(omega, set.means[c]);
  return set.mixtures[c].logpdf(omega);
}

}  // namespace mcattn
