#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fshap/shap.hpp"

namespace fshap {

namespace {

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b *= static_cast<double>(n - k + i) / i;
  return b;
}

// Total Shapley-kernel mass of size layer s (all C(n,s) coalitions):
// C(n,s) * (n-1) / (C(n,s) s (n-s)) = (n-1) / (s (n-s)).
double layer_mass(int n, int s) {
  return static_cast<double>(n - 1) / (static_cast<double>(s) * (n - s));
}

void emit_layer(int n, int s, double per_coalition_weight,
                std::map<std::uint64_t, double>& design) {
  // Enumerate all size-s subsets of [0,n) as bitmasks.
  std::vector<int> pick(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::uint64_t mask = 0;
    for (int i : pick) mask |= std::uint64_t{1} << i;
    design[mask] += per_coalition_weight;
    int j = s - 1;
    while (j >= 0 && pick[static_cast<std::size_t>(j)] == n - s + j) --j;
    if (j < 0) break;
    ++pick[static_cast<std::size_t>(j)];
    for (int t = j + 1; t < s; ++t)
      pick[static_cast<std::size_t>(t)] = pick[static_cast<std::size_t>(t - 1)] + 1;
  }
}

}  // namespace

Attribution kernel_shap(const Predictor& h, std::span<const int> x,
                        const ProductMeasure& mu, std::size_t budget,
                        std::uint64_t seed) {
  const auto& space = mu.space();
  space.validate_state(x);
  const int n = space.feature_count();
  if (n > 63) throw CoalitionLimitError("kernel estimator supports up to 63 features");
  if (budget < static_cast<std::size_t>(n) + 2) {
    throw ParameterError("kernel estimator budget " + std::to_string(budget) +
                         " below minimum n + 2 = " + std::to_string(n + 2));
  }

  const std::vector<int> all_features = [&] {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
  }();
  const double v_empty = coalition_value(h, std::span<const int>{}, x, mu);
  const double v_full = coalition_value(h, all_features, x, mu);
  const double delta = v_full - v_empty;

  Attribution out;
  out.instance.assign(x.begin(), x.end());
  out.phi.assign(static_cast<std::size_t>(n), 0.0);
  out.base_value = v_empty;
  out.method = "kernel";
  if (n == 1) {
    out.phi[0] = delta;
    return out;
  }

  // --- design construction --------------------------------------------------
  // Proper coalitions only (sizes 1..n-1); empty/full are handled by the
  // intercept and the efficiency constraint. Layers are taken in symmetric
  // pairs (s, n-s) from the outside in, matching the kernel's preference for
  // extreme sizes; a pair is enumerated exactly if it fits the remaining
  // budget, otherwise the leftover budget is filled by paired sampling from
  // the residual size distribution.
  std::map<std::uint64_t, double> design;  // mask -> accumulated kernel weight
  std::size_t remaining = budget - 2;
  std::vector<int> residual_sizes;
  for (int s = 1; s <= n / 2; ++s) {
    const int t = n - s;
    if (s > t) break;
    double count = binomial(n, s);
    if (t != s) count += binomial(n, t);
    if (count <= static_cast<double>(remaining)) {
      emit_layer(n, s, layer_mass(n, s) / binomial(n, s), design);
      if (t != s) emit_layer(n, t, layer_mass(n, t) / binomial(n, t), design);
      remaining -= static_cast<std::size_t>(count);
    } else {
      for (int r = s; r <= t; ++r) residual_sizes.push_back(r);
      break;
    }
  }

  if (!residual_sizes.empty() && remaining > 0) {
    double residual_mass = 0.0;
    std::vector<double> cumulative;
    for (int s : residual_sizes) {
      residual_mass += layer_mass(n, s);
      cumulative.push_back(residual_mass);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> pool(all_features);
    std::vector<std::uint64_t> sampled;
    sampled.reserve(remaining);
    while (sampled.size() < remaining) {
      // Size from the residual kernel-mass law; subset uniform given size;
      // the complement rides along while budget allows (paired sampling).
      const double u = unif(rng) * residual_mass;
      int s = residual_sizes.back();
      for (std::size_t j = 0; j < cumulative.size(); ++j) {
        if (u <= cumulative[j]) {
          s = residual_sizes[j];
          break;
        }
      }
      for (int i = 0; i < s; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)],
                  pool[static_cast<std::size_t>(pick(rng))]);
      }
      std::uint64_t mask = 0;
      for (int i = 0; i < s; ++i) mask |= std::uint64_t{1} << pool[static_cast<std::size_t>(i)];
      sampled.push_back(mask);
      if (sampled.size() < remaining) {
        sampled.push_back(~mask & ((std::uint64_t{1} << n) - 1));
      }
    }
    const double share = residual_mass / static_cast<double>(sampled.size());
    for (std::uint64_t mask : sampled) design[mask] += share;
  }

  if (design.size() < static_cast<std::size_t>(n - 1)) {
    throw KernelShapDegenerateError(
        "only " + std::to_string(design.size()) +
        " distinct proper coalitions; need at least " + std::to_string(n - 1));
  }

  // --- constrained weighted least squares -----------------------------------
  // Model: v(S) - v_empty = sum_{i in S} phi_i with sum_i phi_i = delta.
  // Substituting phi_{n-1} = delta - sum_{i<n-1} phi_i turns each row into
  // y - z_{n-1} delta = sum_{i<n-1} (z_i - z_{n-1}) phi_i.
  const int p = n - 1;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  std::vector<int> members;
  Eigen::VectorXd row(p);
  for (const auto& [mask, weight] : design) {
    members.clear();
    for (int f = 0; f < n; ++f) {
      if (mask & (std::uint64_t{1} << f)) members.push_back(f);
    }
    const double v = coalition_value(h, members, x, mu);
    const double z_last = (mask >> (n - 1)) & 1 ? 1.0 : 0.0;
    for (int i = 0; i < p; ++i) {
      const double z_i = (mask >> i) & 1 ? 1.0 : 0.0;
      row(i) = z_i - z_last;
    }
    const double y = (v - v_empty) - z_last * delta;
    xtx.noalias() += weight * row * row.transpose();
    xty.noalias() += weight * y * row;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    throw KernelShapDegenerateError(
        "coalition design is rank-deficient; increase the budget or seed variety");
  }
  const Eigen::VectorXd phi_head = lu.solve(xty);
  double head_sum = 0.0;
  for (int i = 0; i < p; ++i) {
    out.phi[static_cast<std::size_t>(i)] = phi_head(i);
    head_sum += phi_head(i);
  }
  out.phi[static_cast<std::size_t>(n - 1)] = delta - head_sum;
  return out;
}

}  // namespace fshap
