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

namespace mcattn::alloc_tracker {

/// Thread-local live-byte counter with a high-water mark. The counters only
/// move in binaries that link the allocator shim (mcattn_allocshim), i.e.
/// the harness executables; library unit tests run with the plain allocator
/// and read zeros. Byte counts are as reported by the allocator
/// (malloc_usable_size), so they are machine-reported values — ratios are
/// the meaningful quantity.

void reset();
std::uint64_t current_bytes();
std::uint64_t peak_bytes();

// Called by the shim.
void on_allocate(std::uint64_t bytes);
void on_deallocate(std::uint64_t bytes);

}  // namespace mcattn::alloc_tracker
