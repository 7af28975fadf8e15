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

#include <cstdint>
#include <string>

#include "mcattn/attention.hpp"

namespace mcattn {

enum class GeneratorKind { IsotropicGaussian, CorrelatedGaussian, FromFile };

const char* to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

/// Recipe for one attention instance. Synthetic tensors are reproducible
/// functions of (seed, head); FromFile reads a Q/K/V bundle (see tensor_io).
struct DataSpec {
  std::size_t queries = 196;  // N
  std::size_t keys = 196;     // M
  std::size_t dim = 16;       // D
  GeneratorKind generator = GeneratorKind::IsotropicGaussian;
  double scale = 1.0;        // entry standard deviation, > 0
  double correlation = 0.5;  // CorrelatedGaussian inter-column rho in [0, 1)
  std::string path;          // FromFile bundle path
  std::size_t heads = 1;     // harness loop unit
  std::uint64_t seed = 0;
  bool prescale_queries = true;  // fold 1/sqrt(D) into Q at ingestion

  void validate() const;
};

/// Folds 1/sqrt(D) into Q unless already applied; the single point where the
/// conventional attention scale enters.
AttentionInputs scale_queries(AttentionInputs inputs);

AttentionInputs generate_inputs(const DataSpec& spec, std::size_t head = 0);

/// Synthetic self-attention workload with the structure of trained-network
/// activations: a smooth latent token stream (AR(0.95) over positions),
/// queries reading the stream in order, keys carrying a block-shuffled copy
/// of it (content-based rather than positional matching within a block), and
/// values tied to their key's token. Attention is sharp and query-specific;
/// isotropic noise does not produce that regime at any scale. Queries come
/// back prescaled. N = M = length.
AttentionInputs make_token_instance(std::size_t length, std::size_t dim,
                                    std::uint64_t seed);

}  // namespace mcattn
