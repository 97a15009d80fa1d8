#pragma once

#include <span>
#include <string>
#include <vector>

#include "fshap/feature_space.hpp"

namespace fshap {

// Fully supported product probability measure mu = mu_0 x ... x mu_{n-1}.
// Each marginal is strictly positive and sums to 1 within 1e-12; values are
// stored exactly as given (no silent renormalization), so content hashes are
// reproducible.
class ProductMeasure {
 public:
  ProductMeasure(FeatureSpace space, std::vector<std::vector<double>> marginals);
  static ProductMeasure uniform(FeatureSpace space);

  const FeatureSpace& space() const { return space_; }
  const std::vector<double>& marginal(int feature) const;
  double mass(int feature, int state) const;
  // Product mass of a full state vector.
  double state_mass(std::span<const int> state) const;
  // Per-state masses in mixed-radix order; respects the dense limit.
  std::vector<double> dense_mass(std::size_t dense_limit = kDenseLimit) const;

  // FNV-1a hash of the canonical text form (cardinalities + 17-digit
  // marginals). Stored in model file headers so artifacts can be matched.
  std::string content_hash() const;

  // JSON file format: {"cardinalities":[...], "measures":[[...], ...]}.
  static ProductMeasure load_json(const std::string& path);
  void save_json(const std::string& path) const;

  bool operator==(const ProductMeasure& other) const {
    return space_ == other.space_ && marginals_ == other.marginals_;
  }

 private:
  FeatureSpace space_;
  std::vector<std::vector<double>> marginals_;
};

}  // namespace fshap
