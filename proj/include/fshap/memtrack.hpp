#pragma once

#include <cstddef>

namespace fshap::memtrack {

// Peak-allocation instrumentation. The core library only defines hook slots;
// binaries that link the fshap_memtrack library (which replaces global
// operator new/delete) get byte-accurate transient peaks, everything else
// falls back to resident-set deltas.

struct Hooks {
  void (*reset)() = nullptr;          // zero the peak at the current level
  std::size_t (*peak_bytes)() = nullptr;
  std::size_t (*current_bytes)() = nullptr;
};

void set_hooks(const Hooks& hooks);
bool available();

// Resets the peak counter (no-op without hooks).
void reset_peak();
// Peak bytes allocated since the last reset (0 without hooks).
std::size_t peak_bytes();

// Resident-set high-water mark from the OS, in bytes.
std::size_t rss_peak_bytes();

// Defined by the fshap_memtrack library; calling it forces the linker to keep
// the allocator-override translation unit.
void link();

}  // namespace fshap::memtrack
