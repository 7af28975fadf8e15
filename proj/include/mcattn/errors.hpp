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

#include <stdexcept>
#include <string>

namespace mcattn {

/// An exponent that would overflow exp() in 64-bit arithmetic. Carries the
/// offending magnitude so callers can report it.
class OverflowError : public std::runtime_error {
 public:
  OverflowError(const std::string& what, double magnitude)
      : std::runtime_error(what), magnitude_(magnitude) {}
  double magnitude() const { return magnitude_; }

 private:
  double magnitude_;
};

/// Numerically degenerate state: a vanishing self-normalization denominator
/// or a probe point where every proposal density underflows.
class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(const std::string& what) : std::runtime_error(what) {}
  DegeneracyError(const std::string& what, std::size_t query)
      : std::runtime_error(what), query_(static_cast<std::ptrdiff_t>(query)) {}
  /// Index of the affected query, or -1 when not query-specific.
  std::ptrdiff_t query() const { return query_; }

 private:
  std::ptrdiff_t query_ = -1;
};

/// File parsing or filesystem failure. Carries the byte offset where a
/// malformed tensor file stopped making sense (or -1 when inapplicable).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
  IoError(const std::string& what, std::ptrdiff_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::ptrdiff_t byte_offset() const { return byte_offset_; }

 private:
  std::ptrdiff_t byte_offset_ = -1;
};

}  // namespace mcattn
