#include "fshap/feature_space.hpp"

#include <limits>
#include <string>

namespace fshap {

FeatureSpace::FeatureSpace(std::vector<int> cardinalities)
    : cardinalities_(std::move(cardinalities)) {
  if (cardinalities_.empty()) {
    throw DimensionError("feature space needs at least one feature");
  }
  for (std::size_t i = 0; i < cardinalities_.size(); ++i) {
    const int m = cardinalities_[i];
    if (m < 2) {
      throw DimensionError("feature " + std::to_string(i) + " has cardinality " +
                           std::to_string(m) + "; every feature needs >= 2 states");
    }
  }
  // Strides for mixed-radix layout, feature 0 slowest.
  strides_.assign(cardinalities_.size(), 1);
  constexpr std::size_t kMaxStates = std::size_t{1} << 62;
  for (int i = feature_count() - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = total_;
    const auto m = static_cast<std::size_t>(cardinalities_[static_cast<std::size_t>(i)]);
    if (total_ > kMaxStates / m) {
      throw DimensionError("state count overflows: product of cardinalities too large");
    }
    total_ *= m;
  }
}

int FeatureSpace::cardinality(int feature) const {
  if (feature < 0 || feature >= feature_count()) {
    throw DimensionError("feature index " + std::to_string(feature) +
                         " out of range [0, " + std::to_string(feature_count()) + ")");
  }
  return cardinalities_[static_cast<std::size_t>(feature)];
}

std::size_t FeatureSpace::stride(int feature) const {
  if (feature < 0 || feature >= feature_count()) {
    throw DimensionError("feature index " + std::to_string(feature) +
                         " out of range [0, " + std::to_string(feature_count()) + ")");
  }
  return strides_[static_cast<std::size_t>(feature)];
}

void FeatureSpace::validate_state(std::span<const int> state) const {
  if (static_cast<int>(state.size()) != feature_count()) {
    throw DimensionError("state has " + std::to_string(state.size()) +
                         " digits; space has " + std::to_string(feature_count()) +
                         " features");
  }
  for (int i = 0; i < feature_count(); ++i) {
    const int v = state[static_cast<std::size_t>(i)];
    if (v < 0 || v >= cardinalities_[static_cast<std::size_t>(i)]) {
      throw DimensionError("digit " + std::to_string(v) + " of feature " +
                           std::to_string(i) + " outside [0, " +
                           std::to_string(cardinalities_[static_cast<std::size_t>(i)]) +
                           ")");
    }
  }
}

std::size_t FeatureSpace::state_index(std::span<const int> state) const {
  validate_state(state);
  std::size_t index = 0;
  for (int i = 0; i < feature_count(); ++i) {
    index += static_cast<std::size_t>(state[static_cast<std::size_t>(i)]) *
             strides_[static_cast<std::size_t>(i)];
  }
  return index;
}

std::vector<int> FeatureSpace::state_at(std::size_t index) const {
  if (index >= total_) {
    throw DimensionError("state index " + std::to_string(index) + " outside [0, " +
                         std::to_string(total_) + ")");
  }
  std::vector<int> state(static_cast<std::size_t>(feature_count()));
  for (int i = 0; i < feature_count(); ++i) {
    const std::size_t s = strides_[static_cast<std::size_t>(i)];
    state[static_cast<std::size_t>(i)] = static_cast<int>(index / s);
    index %= s;
  }
  return state;
}

}  // namespace fshap
