// Global allocator overrides that feed the memtrack hook registry. This file
// lives in its own static library (fshap_memtrack) so that only binaries that
// opt in pay the per-allocation atomic cost.

#include "fshap/memtrack.hpp"

#include <atomic>
#include <cstdlib>
#include <new>

#include <malloc.h>

namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};

void note_alloc(void* p) {
  if (p == nullptr) return;
  const std::size_t size = malloc_usable_size(p);
  const std::size_t now =
      g_current.fetch_add(size, std::memory_order_relaxed) + size;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak &&
         !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void note_free(void* p) {
  if (p == nullptr) return;
  g_current.fetch_sub(malloc_usable_size(p), std::memory_order_relaxed);
}

void reset_impl() {
  g_peak.store(g_current.load(std::memory_order_relaxed),
               std::memory_order_relaxed);
}

std::size_t peak_impl() { return g_peak.load(std::memory_order_relaxed); }

std::size_t current_impl() {
  return g_current.load(std::memory_order_relaxed);
}

struct Registrar {
  Registrar() {
    fshap::memtrack::Hooks hooks;
    hooks.reset = &reset_impl;
    hooks.peak_bytes = &peak_impl;
    hooks.current_bytes = &current_impl;
    fshap::memtrack::set_hooks(hooks);
  }
};

Registrar g_registrar;

}  // namespace

namespace fshap::memtrack {
void link() {}
}  // namespace fshap::memtrack

void* operator new(std::size_t size) {
  void* p = std::malloc(size);
  if (p == nullptr) throw std::bad_alloc();
  note_alloc(p);
  return p;
}

void* operator new[](std::size_t size) { return ::operator new(size); }

void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  void* p = std::malloc(size);
  note_alloc(p);
  return p;
}

void* operator new[](std::size_t size, const std::nothrow_t& tag) noexcept {
  return ::operator new(size, tag);
}

void operator delete(void* p) noexcept {
  note_free(p);
  std::free(p);
}

void operator delete[](void* p) noexcept { ::operator delete(p); }

void operator delete(void* p, std::size_t) noexcept { ::operator delete(p); }

void operator delete[](void* p, std::size_t) noexcept { ::operator delete(p); }

void operator delete(void* p, const std::nothrow_t&) noexcept {
  ::operator delete(p);
}

void operator delete[](void* p, const std::nothrow_t&) noexcept {
  ::operator delete(p);
}
