#include "fshap/memtrack.hpp"

#include <cstdio>
#include <cstring>
#include <string>

#include <sys/resource.h>

namespace fshap::memtrack {

namespace {
Hooks g_hooks;
}

void set_hooks(const Hooks& hooks) { g_hooks = hooks; }

bool available() { return g_hooks.peak_bytes != nullptr; }

void reset_peak() {
  if (g_hooks.reset != nullptr) g_hooks.reset();
}

std::size_t peak_bytes() {
  return g_hooks.peak_bytes != nullptr ? g_hooks.peak_bytes() : 0;
}

std::size_t rss_peak_bytes() {
  struct rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0;
  // ru_maxrss is reported in kilobytes on Linux.
  return static_cast<std::size_t>(usage.ru_maxrss) * 1024;
}

}  // namespace fshap::memtrack
