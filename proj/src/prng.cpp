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

#include "mcattn/prng.hpp"

#include <cmath>
#include <numbers>

namespace mcattn {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSeedSalt = 0x6A09E667F3BCC909ULL;
constexpr std::uint64_t kStreamSalt = 0xBB67AE8584CAA73BULL;
constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;

// splitmix64 finalizer (Steele, Lea & Flood; Vigna's fixed-increment form).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t initial_state(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed + kSeedSalt) ^ mix64(stream + kStreamSalt);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), state_(initial_state(seed, stream)) {}

RandomSource RandomSource::split(std::uint64_t index) const {
  return RandomSource(seed_, mix64(stream_ + (index + 1) * kSplitSalt));
}

RandomSource RandomSource::with_stream(std::uint64_t stream) const {
  return RandomSource(seed_, stream);
}

std::uint64_t RandomSource::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RandomSource::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::next_open_uniform() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

void RandomSource::fill_standard_normal(std::span<double> out) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const double u1 = next_open_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < out.size()) out[i + 1] = radius * std::sin(angle);
  }
}

std::vector<double> RandomSource::standard_normal(std::size_t n) {
  std::vector<double> out(n);
  fill_standard_normal(out);
  return out;
}

}  // namespace mcattn
