#pragma once

#include <compare>
#include <string>
#include <vector>

#include "fshap/feature_space.hpp"

namespace fshap {

// Frequency multi-index k = (k_0, ..., k_{n-1}) with 0 <= k_i <= d_i. The
// digit ranges coincide with the state ranges of the owning FeatureSpace, so
// FeatureSpace::state_index doubles as the flat index of a multi-index.
//
// Ordering is lexicographic; it fixes iteration order of coefficient maps and
// therefore the byte layout of serialized models.
struct MultiIndex {
  std::vector<int> digits;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> d) : digits(std::move(d)) {}
  static MultiIndex zeros(int n) {
    return MultiIndex(std::vector<int>(static_cast<std::size_t>(n), 0));
  }

  int size() const { return static_cast<int>(digits.size()); }
  int operator[](int i) const { return digits[static_cast<std::size_t>(i)]; }

  bool is_zero() const {
    for (int d : digits)
      if (d != 0) return false;
    return true;
  }

  // Interaction order d(k) = |Supp(k)|.
  int order() const {
    int count = 0;
    for (int d : digits) count += (d != 0);
    return count;
  }

  // Supp(k): features with a nonzero digit, ascending.
  std::vector<int> support() const {
    std::vector<int> s;
    for (int i = 0; i < size(); ++i)
      if (digits[static_cast<std::size_t>(i)] != 0) s.push_back(i);
    return s;
  }

  std::string to_string() const;

  auto operator<=>(const MultiIndex&) const = default;
};

// Checks digit count and ranges against the space; DimensionError otherwise.
void validate_multi_index(const FeatureSpace& space, const MultiIndex& k);

}  // namespace fshap
