#include "fshap/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fshap {

namespace {

// Exact n!; n <= 20 keeps everything inside uint64.
std::vector<std::uint64_t> factorials(int n) {
  std::vector<std::uint64_t> f(static_cast<std::size_t>(n) + 1, 1);
  for (int i = 1; i <= n; ++i)
    f[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i - 1)] *
                                     static_cast<std::uint64_t>(i);
  return f;
}

// Recursively integrates the complement features; weight is the exact product
// of marginal masses along the path, so no drift accumulates.
void integrate_complement(const Predictor& h, const ProductMeasure& mu,
                          const std::vector<int>& complement, std::size_t pos,
                          std::vector<int>& state, double weight, double& acc) {
  if (pos == complement.size()) {
    acc += weight * h(std::span<const int>(state));
    return;
  }
  const int feature = complement[pos];
  const auto& marginal = mu.marginal(feature);
  for (int v = 0; v < static_cast<int>(marginal.size()); ++v) {
    state[static_cast<std::size_t>(feature)] = v;
    integrate_complement(h, mu, complement, pos + 1, state,
                         weight * marginal[static_cast<std::size_t>(v)], acc);
  }
}

}  // namespace

Predictor make_predictor(DensePredictor dense) {
  return [table = std::move(dense)](std::span<const int> x) { return table(x); };
}

Predictor make_predictor(SparseFourierModel model) {
  return [m = std::move(model)](std::span<const int> x) { return m.evaluate(x); };
}

double Attribution::total() const {
  double t = base_value;
  for (double p : phi) t += p;
  return t;
}

double coalition_value(const Predictor& h, std::span<const int> coalition,
                       std::span<const int> x, const ProductMeasure& mu,
                       std::size_t complement_limit) {
  const auto& space = mu.space();
  space.validate_state(x);
  std::vector<bool> pinned(static_cast<std::size_t>(space.feature_count()), false);
  for (int f : coalition) {
    if (f < 0 || f >= space.feature_count()) {
      throw DimensionError("coalition feature " + std::to_string(f) +
                           " outside [0, " + std::to_string(space.feature_count()) +
                           ")");
    }
    if (pinned[static_cast<std::size_t>(f)]) {
      throw DimensionError("coalition repeats feature " + std::to_string(f));
    }
    pinned[static_cast<std::size_t>(f)] = true;
  }
  std::vector<int> complement;
  std::size_t complement_states = 1;
  for (int f = 0; f < space.feature_count(); ++f) {
    if (!pinned[static_cast<std::size_t>(f)]) {
      complement.push_back(f);
      const auto m = static_cast<std::size_t>(space.cardinality(f));
      if (complement_states > complement_limit / m) {
        throw DenseLimitError("coalition complement exceeds " +
                              std::to_string(complement_limit) + " states");
      }
      complement_states *= m;
    }
  }
  std::vector<int> state(x.begin(), x.end());
  double acc = 0.0;
  integrate_complement(h, mu, complement, 0, state, 1.0, acc);
  return acc;
}

Attribution brute_force_shap(const Predictor& h, std::span<const int> x,
                             const ProductMeasure& mu) {
  const auto& space = mu.space();
  space.validate_state(x);
  const int n = space.feature_count();
  if (n > kMaxBruteForceFeatures) {
    throw CoalitionLimitError("brute force supports up to " +
                              std::to_string(kMaxBruteForceFeatures) +
                              " features; space has " + std::to_string(n));
  }

  // One coalition value per subset bitmask (bit i = feature i pinned).
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> value(subsets);
  std::vector<int> members;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    members.clear();
    for (int f = 0; f < n; ++f) {
      if (mask & (std::size_t{1} << f)) members.push_back(f);
    }
    value[mask] = coalition_value(h, members, x, mu);
  }

  const auto fact = factorials(n);
  Attribution out;
  out.instance.assign(x.begin(), x.end());
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  out.base_value = value[0];
  out.method = "brute";
  for (int i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      // |S|! (n-|S|-1)! / n!, numerator and denominator exact in uint64.
      const double weight =
          static_cast<double>(fact[static_cast<std::size_t>(s)]) *
          static_cast<double>(fact[static_cast<std::size_t>(n - s - 1)]) /
          static_cast<double>(fact[static_cast<std::size_t>(n)]);
      phi += weight * (value[mask | bit] - value[mask]);
    }
    out.phi[static_cast<std::size_t>(i)] = phi;
  }
  return out;
}

Attribution fourier_shap(const SparseFourierModel& model, std::span<const int> x) {
  const auto& space = model.space();
  space.validate_state(x);
  const int n = space.feature_count();
  Attribution out;
  out.instance.assign(x.begin(), x.end());
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  out.method = "fourier";
  for (const auto& [k, c] : model.entries()) {
    if (k.is_zero()) {
      out.base_value += c;
      continue;
    }
    const double share = c * model.basis().atom_unchecked(k, x) / k.order();
    for (int i = 0; i < n; ++i) {
      if (k[i] != 0) out.phi[static_cast<std::size_t>(i)] += share;
    }
  }
  return out;
}

double FrequencyWeights::sq_sum() const {
  double acc = 0.0;
  for (const auto& [k, w] : weights) acc += w * w;
  return acc;
}

double atom_shap_weight(const TensorBasis& basis, const MultiIndex& k,
                        int feature, std::span<const int> x) {
  validate_multi_index(basis.space(), k);
  basis.space().validate_state(x);
  basis.space().cardinality(feature);  // range check
  if (k[feature] == 0) return 0.0;
  return std::abs(basis.atom_unchecked(k, x)) / k.order();
}

FrequencyWeights frequency_weights(const SparseFourierModel& model, int feature,
                                   std::span<const int> x) {
  const auto& space = model.space();
  space.validate_state(x);
  space.cardinality(feature);  // range check
  FrequencyWeights out;
  out.feature = feature;
  out.instance.assign(x.begin(), x.end());
  for (const auto& [k, c] : model.entries()) {
    (void)c;
    if (k[feature] == 0) continue;  // indicator kills the weight
    out.weights.emplace(
        k, std::abs(model.basis().atom_unchecked(k, x)) / k.order());
  }
  return out;
}

double tail_weight_sq_sum(const TensorBasis& basis,
                          const std::set<MultiIndex>& keep, int feature,
                          std::span<const int> x, std::size_t dense_limit) {
  const auto& space = basis.space();
  space.validate_state(x);
  space.cardinality(feature);  // range check
  if (space.total_states() > dense_limit) {
    throw DenseLimitError("full frequency set has " +
                          std::to_string(space.total_states()) +
                          " indices; limit is " + std::to_string(dense_limit));
  }
  double acc = 0.0;
  MultiIndex k;
  for_each_state(space, [&](std::span<const int> digits) {
    const int mode = digits[static_cast<std::size_t>(feature)];
    if (mode == 0) return;  // weight vanishes
    k.digits.assign(digits.begin(), digits.end());
    if (keep.count(k)) return;
    const double w = std::abs(basis.atom_unchecked(k, x)) / k.order();
    acc += w * w;
  });
  return acc;
}

double truncation_bound(const SparseFourierModel& model,
                        const std::set<MultiIndex>& keep, int feature,
                        std::span<const int> x) {
  const auto& space = model.space();
  space.validate_state(x);
  space.cardinality(feature);  // range check
  double weight_sq = 0.0;
  double residual_sq = 0.0;
  for (const auto& [k, c] : model.entries()) {
    if (keep.count(k)) continue;
    residual_sq += c * c;
    if (k[feature] != 0) {
      const double w = std::abs(model.basis().atom_unchecked(k, x)) / k.order();
      weight_sq += w * w;
    }
  }
  return std::sqrt(weight_sq) * std::sqrt(residual_sq);
}

}  // namespace fshap
