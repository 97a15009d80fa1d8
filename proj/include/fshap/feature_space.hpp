#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fshap/errors.hpp"

namespace fshap {

// Hard ceiling on dense state enumeration (tables, transforms, coalition
// marginalization). Operations that would walk more states than this raise
// DenseLimitError unless the caller overrides the limit explicitly.
inline constexpr std::size_t kDenseLimit = std::size_t{1} << 20;

// Finite product space {0..m_0-1} x ... x {0..m_{n-1}-1}. Every cardinality
// m_i is at least 2; a constant feature has no basis direction and is
// rejected at construction.
//
// Dense tables over the space use mixed-radix order with feature 0 as the
// slowest digit: index(x) = sum_i x_i * stride(i), stride(i) = prod_{j>i} m_j.
// Multi-indices share the same digit ranges, so the same flattening applies
// to frequency enumeration.
class FeatureSpace {
 public:
  explicit FeatureSpace(std::vector<int> cardinalities);

  int feature_count() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int feature) const;
  // Largest mode/state for a feature: d_i = m_i - 1.
  int max_mode(int feature) const { return cardinality(feature) - 1; }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  std::size_t total_states() const { return total_; }
  std::size_t stride(int feature) const;

  std::size_t state_index(std::span<const int> state) const;
  std::vector<int> state_at(std::size_t index) const;
  void validate_state(std::span<const int> state) const;

  bool operator==(const FeatureSpace& other) const {
    return cardinalities_ == other.cardinalities_;
  }

 private:
  std::vector<int> cardinalities_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
};

// Invokes fn(state) for every state in mixed-radix order (feature 0 slowest).
// The span passed to fn is reused between calls; copy it if you keep it.
template <typename Fn>
void for_each_state(const FeatureSpace& space, Fn&& fn) {
  const int n = space.feature_count();
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(std::span<const int>(state));
    int pos = n - 1;
    while (pos >= 0 && ++state[static_cast<std::size_t>(pos)] ==
                           space.cardinality(pos)) {
      state[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

}  // namespace fshap
