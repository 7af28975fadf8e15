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

#include "mcattn/data.hpp"

#include <cmath>
#include <stdexcept>

#include "mcattn/tensor_io.hpp"

namespace mcattn {
namespace {

RealMatrix isotropic_matrix(std::size_t rows, std::size_t cols, double scale,
                            RandomSource rng) {
  RealMatrix out(rows, cols);
  rng.fill_standard_normal(out.data());
  if (scale != 1.0) {
    for (double& v : out.data()) v *= scale;
  }
  return out;
}

// Rows are independent; within a row, every column shares a common factor so
// that corr(col_i, col_j) = rho for i != j.
RealMatrix correlated_matrix(std::size_t rows, std::size_t cols, double scale,
                             double rho, RandomSource rng) {
  RealMatrix out(rows, cols);
  const double shared_coeff = std::sqrt(rho);
  const double private_coeff = std::sqrt(1.0 - rho);
  std::vector<double> noise(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double shared[1];
    rng.fill_standard_normal(shared);
    rng.fill_standard_normal(noise);
    auto row = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = scale * (shared_coeff * shared[0] + private_coeff * noise[c]);
    }
  }
  return out;
}

}  // namespace

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::IsotropicGaussian: return "iso";
    case GeneratorKind::CorrelatedGaussian: return "corr";
    case GeneratorKind::FromFile: return "file";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "iso") return GeneratorKind::IsotropicGaussian;
  if (name == "corr") return GeneratorKind::CorrelatedGaussian;
  if (name == "file") return GeneratorKind::FromFile;
  throw std::invalid_argument("unknown generator kind: " + name);
}

void DataSpec::validate() const {
  if (generator != GeneratorKind::FromFile) {
    if (queries == 0 || keys == 0 || dim == 0) {
      throw std::invalid_argument("DataSpec: N, M, D must be >= 1");
    }
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("DataSpec: scale must be positive");
  }
  if (!(correlation >= 0.0 && correlation < 1.0)) {
    throw std::invalid_argument("DataSpec: correlation must lie in [0, 1)");
  }
  if (heads == 0) {
    throw std::invalid_argument("DataSpec: heads must be >= 1");
  }
  if (generator == GeneratorKind::FromFile && path.empty()) {
    throw std::invalid_argument("DataSpec: FromFile needs a path");
  }
}

AttentionInputs scale_queries(AttentionInputs inputs) {
  if (!inputs.prescaled) {
    const double factor = 1.0 / std::sqrt(static_cast<double>(inputs.dim()));
    for (double& v : inputs.Q.data()) v *= factor;
    inputs.prescaled = true;
  }
  return inputs;
}

AttentionInputs make_token_instance(std::size_t length, std::size_t dim,
                                    std::uint64_t seed) {
  if (length == 0 || dim == 0) {
    throw std::invalid_argument("make_token_instance: length and dim must be >= 1");
  }
  constexpr double kSmoothness = 0.95;   // AR coefficient over positions
  constexpr double kSharpness = 2.75;    // query/key scale (attention peaking)
  constexpr double kQueryKeyNoise = 0.10;
  constexpr double kValueNoise = 0.05;
  constexpr std::size_t kShuffleBlock = 32;

  RandomSource rng(seed, 0x70CE);
  RealMatrix tokens(length, dim);
  std::vector<double> state(dim, 0.0);
  std::vector<double> fresh(dim);
  const double drift = std::sqrt(1.0 - kSmoothness * kSmoothness);
  for (std::size_t i = 0; i < length; ++i) {
    rng.fill_standard_normal(fresh);
    for (std::size_t j = 0; j < dim; ++j) {
      state[j] = i == 0 ? fresh[j] : kSmoothness * state[j] + drift * fresh[j];
      tokens(i, j) = state[j];
    }
  }

  // Keys read the stream through a within-block shuffle: coarse landmark
  // segments still cover the content a query attends to, fine ones do not.
  std::vector<std::size_t> order(length);
  for (std::size_t i = 0; i < length; ++i) order[i] = i;
  RandomSource shuffle_rng = rng.split(11);
  for (std::size_t begin = 0; begin < length; begin += kShuffleBlock) {
    const std::size_t size = std::min(length - begin, kShuffleBlock);
    for (std::size_t i = size; i > 1; --i) {
      const std::size_t j = shuffle_rng.next_u64() % i;
      std::swap(order[begin + i - 1], order[begin + j]);
    }
  }

  RealMatrix q(length, dim), k(length, dim), v(length, dim);
  RandomSource q_noise = rng.split(1), k_noise = rng.split(2), v_noise = rng.split(3);
  std::vector<double> noise(dim);
  for (std::size_t i = 0; i < length; ++i) {
    q_noise.fill_standard_normal(noise);
    for (std::size_t j = 0; j < dim; ++j) {
      q(i, j) = kSharpness * (tokens(i, j) + kQueryKeyNoise * noise[j]);
    }
    k_noise.fill_standard_normal(noise);
    for (std::size_t j = 0; j < dim; ++j) {
      k(i, j) = kSharpness * (tokens(order[i], j) + kQueryKeyNoise * noise[j]);
    }
    v_noise.fill_standard_normal(noise);
    for (std::size_t j = 0; j < dim; ++j) {
      v(i, j) = tokens(order[i], j) + kValueNoise * noise[j];
    }
  }
  return scale_queries(AttentionInputs(std::move(q), std::move(k), std::move(v)));
}

AttentionInputs generate_inputs(const DataSpec& spec, std::size_t head) {
  spec.validate();
  if (head >= spec.heads) {
    throw std::invalid_argument("generate_inputs: head index out of range");
  }
  if (spec.generator == GeneratorKind::FromFile) {
    AttentionInputs inputs = read_inputs_bundle(spec.path);
    return spec.prescale_queries ? scale_queries(std::move(inputs))
                                 : inputs;
  }

  const RandomSource head_rng = RandomSource(spec.seed).split(head);
  RealMatrix q, k, v;
  if (spec.generator == GeneratorKind::IsotropicGaussian) {
    q = isotropic_matrix(spec.queries, spec.dim, spec.scale, head_rng.split(0));
    k = isotropic_matrix(spec.keys, spec.dim, spec.scale, head_rng.split(1));
    v = isotropic_matrix(spec.keys, spec.dim, spec.scale, head_rng.split(2));
  } else {
    q = correlated_matrix(spec.queries, spec.dim, spec.scale, spec.correlation,
                          head_rng.split(0));
    k = correlated_matrix(spec.keys, spec.dim, spec.scale, spec.correlation,
                          head_rng.split(1));
    v = correlated_matrix(spec.keys, spec.dim, spec.scale, spec.correlation,
                          head_rng.split(2));
  }
  AttentionInputs inputs(std::move(q), std::move(k), std::move(v), false);
  return spec.prescale_queries ? scale_queries(std::move(inputs)) : inputs;
}

}  // namespace mcattn
