#include "fshap/hash.hpp"

#include <cstdio>

namespace fshap {

std::string fnv1a64_hex(std::string_view text) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return std::string(buf);
}

}  // namespace fshap
