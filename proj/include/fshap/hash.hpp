#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fshap {

// 64-bit FNV-1a. Used for content hashes in file headers and run manifests;
// stable across platforms because it only touches bytes.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view text);

}  // namespace fshap
