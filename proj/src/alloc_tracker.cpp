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

#include "mcattn/alloc_tracker.hpp"

namespace mcattn::alloc_tracker {
namespace {

thread_local std::uint64_t t_current = 0;
thread_local std::uint64_t t_peak = 0;

}  // namespace

void reset() {
  t_current = 0;
  t_peak = 0;
}

std::uint64_t current_bytes() { return t_current; }
std::uint64_t peak_bytes() { return t_peak; }

void on_allocate(std::uint64_t bytes) {
  t_current += bytes;
  if (t_current > t_peak) t_peak = t_current;
}

void on_deallocate(std::uint64_t bytes) {
  t_current = bytes > t_current ? 0 : t_current - bytes;
}

}  // namespace mcattn::alloc_tracker
