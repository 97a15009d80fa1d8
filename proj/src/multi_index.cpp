#include "fshap/multi_index.hpp"

namespace fshap {

std::string MultiIndex::to_string() const {
  std::string out = "(";
  for (int i = 0; i < size(); ++i) {
    if (i) out += ",";
    out += std::to_string(digits[static_cast<std::size_t>(i)]);
  }
  out += ")";
  return out;
}

void validate_multi_index(const FeatureSpace& space, const MultiIndex& k) {
  if (k.size() != space.feature_count()) {
    throw DimensionError("multi-index " + k.to_string() + " has " +
                         std::to_string(k.size()) + " digits; space has " +
                         std::to_string(space.feature_count()) + " features");
  }
  for (int i = 0; i < k.size(); ++i) {
    if (k[i] < 0 || k[i] > space.max_mode(i)) {
      throw DimensionError("multi-index digit " + std::to_string(k[i]) +
                           " of feature " + std::to_string(i) + " outside [0, " +
                           std::to_string(space.max_mode(i)) + "]");
    }
  }
}

}  // namespace fshap
