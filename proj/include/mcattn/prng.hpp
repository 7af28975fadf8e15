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
#include <span>
#include <vector>

namespace mcattn {

/// Seeded, splittable random source. The generator is a splitmix64 sequence
/// whose start state is a strong hash of (seed, stream-id), so the draw
/// sequence is a pure function of those two values: identical (seed, stream)
/// pairs replay identical sequences, and distinct streams are statistically
/// independent without any shared mutable state.
///
/// RandomSource is a small value type; copy it freely. Per-query, per-trial
/// or per-sample streams are derived with split()/with_stream(), never by
/// sharing one advancing instance across threads.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Derived independent stream for sub-task `index` (hash-mixed, safe to
  /// nest: split(a).split(b) collides with nothing in practice).
  RandomSource split(std::uint64_t index) const;

  /// Same seed, explicit stream-id (used for the per-query `base ^ n` rule).
  RandomSource with_stream(std::uint64_t stream) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double next_uniform();

  /// Uniform on (0, 1] (safe as a log() argument).
  double next_open_uniform();

  /// Fills `out` with independent standard normal draws (Box-Muller, fixed
  /// consumption of 2*ceil(n/2) uniforms per call).
  void fill_standard_normal(std::span<double> out);

  std::vector<double> standard_normal(std::size_t n);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t state_ = 0;
};

}  // namespace mcattn
