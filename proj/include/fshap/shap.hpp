#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fshap/spectral_model.hpp"

namespace fshap {

// Exact subset enumeration caps out here; 20!'s factorial arithmetic still
// fits in 64 bits, so Shapley combinatorial weights stay exact rationals.
inline constexpr int kMaxBruteForceFeatures = 20;

// Any evaluable function on the space: dense table, sparse expansion, or a
// network head. Called with a full state vector.
using Predictor = std::function<double(std::span<const int>)>;

Predictor make_predictor(DensePredictor dense);
Predictor make_predictor(SparseFourierModel model);

// One attribution result: per-feature scores phi, the base value (grand mean
// under the measure for exact methods), and the producing method tag.
struct Attribution {
  std::vector<int> instance;
  std::vector<double> phi;
  double base_value = 0.0;
  std::string method;  // "brute" | "fourier" | "kernel"

  double total() const;  // base_value + sum(phi)
};

// Coalition value v(S) = E_mu[h(X) | X_S = x_S]: features in `coalition` are
// pinned to x, the rest are integrated out exactly by enumerating complement
// states. DenseLimitError if the complement has more than `complement_limit`
// states; duplicate or out-of-range coalition features raise DimensionError.
double coalition_value(const Predictor& h, std::span<const int> coalition,
                       std::span<const int> x, const ProductMeasure& mu,
                       std::size_t complement_limit = kDenseLimit);

// Exact Shapley values by full subset enumeration with exact rational
// coalition weights. CoalitionLimitError above kMaxBruteForceFeatures.
Attribution brute_force_shap(const Predictor& h, std::span<const int> x,
                             const ProductMeasure& mu);

// Closed-form Shapley values of a sparse expansion:
// phi_i = sum_{k: k_i != 0} c_k atom_k(x) / order(k), base = c_0.
Attribution fourier_shap(const SparseFourierModel& model, std::span<const int> x);

// Per-frequency attribution weights for one feature at one instance:
// w_k = |atom_k(x)| / order(k) over the stored entries with k_i != 0
// (entries the indicator zeroes out are omitted).
struct FrequencyWeights {
  int feature = 0;
  std::vector<int> instance;
  std::map<MultiIndex, double> weights;

  double sq_sum() const;
};

FrequencyWeights frequency_weights(const SparseFourierModel& model, int feature,
                                   std::span<const int> x);

// Single-index weight w_k(i; x) against an explicit basis.
double atom_shap_weight(const TensorBasis& basis, const MultiIndex& k,
                        int feature, std::span<const int> x);

// sum of w_k(i;x)^2 over every index of the full frequency set NOT in `keep`.
// Walks the whole index set; DenseLimitError past the dense limit.
double tail_weight_sq_sum(const TensorBasis& basis,
                          const std::set<MultiIndex>& keep, int feature,
                          std::span<const int> x,
                          std::size_t dense_limit = kDenseLimit);

// Certified truncation error for feature i at x when the model is truncated
// to `keep`: sqrt(sum_{stored k not in keep} w_k^2) * residual_energy.
// Guaranteed >= |phi_i(model) - phi_i(truncated model)|.
double truncation_bound(const SparseFourierModel& model,
                        const std::set<MultiIndex>& keep, int feature,
                        std::span<const int> x);

// Shapley-kernel weighted least-squares estimator. Always evaluates the empty
// and full coalitions and enforces the efficiency constraint exactly; size
// layers are enumerated exactly while they fit the budget, the remainder is
// filled by seeded paired sampling. budget >= n + 2 (ParameterError), and a
// rank-deficient design raises KernelShapDegenerateError. At budget >= 2^n the
// design is complete and the estimate equals the exact Shapley values.
Attribution kernel_shap(const Predictor& h, std::span<const int> x,
                        const ProductMeasure& mu, std::size_t budget,
                        std::uint64_t seed);

}  // namespace fshap
