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

// Global operator new/delete instrumentation for the harness executables.
// Each allocation carries a small header recording the requested size, so
// the live-byte counters reflect exactly what the program asked for —
// independent of allocator bin sizes, thread arenas, or reuse history. That
// exactness is what keeps benchmark reports byte-reproducible.

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <new>

#include "mcattn/alloc_tracker.hpp"

namespace {

constexpr std::size_t kMinOffset = 2 * sizeof(std::uint64_t);

void* tracked_allocate(std::size_t size, std::size_t alignment) {
  const std::size_t offset = alignment > kMinOffset ? alignment : kMinOffset;
  void* base = alignment > alignof(std::max_align_t)
                   ? std::aligned_alloc(alignment, offset + ((size + alignment - 1) /
                                                             alignment * alignment))
                   : std::malloc(offset + size);
  if (base == nullptr) throw std::bad_alloc();
  auto* user = static_cast<char*>(base) + offset;
  reinterpret_cast<std::uint64_t*>(user)[-1] = offset;
  reinterpret_cast<std::uint64_t*>(user)[-2] = size;
  mcattn::alloc_tracker::on_allocate(size);
  return user;
}

void tracked_free(void* p) noexcept {
  if (p == nullptr) return;
  const std::uint64_t offset = reinterpret_cast<std::uint64_t*>(p)[-1];
  const std::uint64_t size = reinterpret_cast<std::uint64_t*>(p)[-2];
  mcattn::alloc_tracker::on_deallocate(size);
  std::free(static_cast<char*>(p) - offset);
}

}  // namespace

void* operator new(std::size_t size) { return tracked_allocate(size, 0); }
void* operator new[](std::size_t size) { return tracked_allocate(size, 0); }

void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return tracked_allocate(size, 0);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return tracked_allocate(size, 0);
  } catch (...) {
    return nullptr;
  }
}

void* operator new(std::size_t size, std::align_val_t alignment) {
  return tracked_allocate(size, static_cast<std::size_t>(alignment));
}
void* operator new[](std::size_t size, std::align_val_t alignment) {
  return tracked_allocate(size, static_cast<std::size_t>(alignment));
}

void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept {
  tracked_free(p);
}
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept {
  tracked_free(p);
}
