#include "fshap/spectral_model.hpp"

#include <cmath>

#include "fshap/format.hpp"

namespace fshap {

namespace {

// Applies an m x m matrix along one axis of a dense mixed-radix table:
// out[..., j, ...] = sum_x M[j][x] * in[..., x, ...]. M is row-major.
void apply_axis(std::vector<double>& data, const FeatureSpace& space, int axis,
                const std::vector<std::vector<double>>& matrix) {
  const std::size_t stride = space.stride(axis);
  const std::size_t m = static_cast<std::size_t>(space.cardinality(axis));
  const std::size_t block = stride * m;
  const std::size_t total = space.total_states();
  std::vector<double> slice(m);
  for (std::size_t base = 0; base < total; base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      const std::size_t origin = base + off;
      for (std::size_t x = 0; x < m; ++x) slice[x] = data[origin + x * stride];
      for (std::size_t j = 0; j < m; ++j) {
        const auto& row = matrix[j];
        double acc = 0.0;
        for (std::size_t x = 0; x < m; ++x) acc += row[x] * slice[x];
        data[origin + j * stride] = acc;
      }
    }
  }
}

}  // namespace

DensePredictor::DensePredictor(FeatureSpace s, std::vector<double> v)
    : space(std::move(s)), values(std::move(v)) {
  if (values.size() != space.total_states()) {
    throw DimensionError("dense table has " + std::to_string(values.size()) +
                         " values; space has " +
                         std::to_string(space.total_states()) + " states");
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("dense table has a non-finite value");
  }
}

SparseFourierModel::SparseFourierModel(std::shared_ptr<const TensorBasis> basis,
                                       std::map<MultiIndex, double> entries)
    : basis_(std::move(basis)) {
  if (!basis_) throw ParameterError("sparse model needs a basis");
  for (auto& [k, c] : entries) {
    validate_multi_index(basis_->space(), k);
    if (!std::isfinite(c)) {
      throw NumericError("coefficient at " + k.to_string() + " is not finite");
    }
    if (std::abs(c) < kCoefficientPruneThreshold) continue;
    interaction_order_ = std::max(interaction_order_, k.order());
    entries_.emplace(k, c);
  }
}

double SparseFourierModel::coefficient(const MultiIndex& k) const {
  validate_multi_index(space(), k);
  const auto it = entries_.find(k);
  return it == entries_.end() ? 0.0 : it->second;
}

double SparseFourierModel::evaluate(std::span<const int> x) const {
  space().validate_state(x);
  double acc = 0.0;
  for (const auto& [k, c] : entries_) acc += c * basis_->atom_unchecked(k, x);
  return acc;
}

std::vector<double> SparseFourierModel::to_dense(std::size_t dense_limit) const {
  const auto& sp = space();
  if (sp.total_states() > dense_limit) {
    throw DenseLimitError("dense synthesis needs " +
                          std::to_string(sp.total_states()) +
                          " states; limit is " + std::to_string(dense_limit));
  }
  // Scatter coefficients into a dense tensor, then run the per-axis synthesis
  // passes with matrix G[x][j] = psi_j(x).
  std::vector<double> data(sp.total_states(), 0.0);
  for (const auto& [k, c] : entries_) {
    data[sp.state_index(k.digits)] = c;
  }
  for (int i = 0; i < sp.feature_count(); ++i) {
    const auto& coord = basis_->coordinate(i);
    const std::size_t m = static_cast<std::size_t>(coord.size());
    std::vector<std::vector<double>> g(m, std::vector<double>(m));
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t j = 0; j < m; ++j)
        g[x][j] = coord.value(static_cast<int>(j), static_cast<int>(x));
    apply_axis(data, sp, i, g);
  }
  return data;
}

double SparseFourierModel::parseval_norm() const {
  double acc = 0.0;
  for (const auto& [k, c] : entries_) acc += c * c;
  return std::sqrt(acc);
}

SparseFourierModel forward_transform(const DensePredictor& predictor,
                                     std::shared_ptr<const TensorBasis> basis,
                                     std::size_t dense_limit) {
  if (!basis) throw ParameterError("forward transform needs a basis");
  const auto& sp = basis->space();
  if (!(sp == predictor.space)) {
    throw DimensionError("dense predictor space does not match basis space");
  }
  if (sp.total_states() > dense_limit) {
    throw DenseLimitError("forward transform needs " +
                          std::to_string(sp.total_states()) +
                          " states; limit is " + std::to_string(dense_limit));
  }
  // Analysis matrix per axis: F[j][x] = psi_j(x) * mu_i(x).
  std::vector<double> data = predictor.values;
  for (int i = 0; i < sp.feature_count(); ++i) {
    const auto& coord = basis->coordinate(i);
    const auto& marginal = basis->measure().marginal(i);
    const std::size_t m = static_cast<std::size_t>(coord.size());
    std::vector<std::vector<double>> f(m, std::vector<double>(m));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t x = 0; x < m; ++x)
        f[j][x] = coord.value(static_cast<int>(j), static_cast<int>(x)) * marginal[x];
    apply_axis(data, sp, i, f);
  }
  std::map<MultiIndex, double> entries;
  std::size_t idx = 0;
  for_each_state(sp, [&](std::span<const int> k) {
    const double c = data[idx++];
    if (std::abs(c) >= kCoefficientPruneThreshold) {
      entries.emplace(MultiIndex(std::vector<int>(k.begin(), k.end())), c);
    }
  });
  return SparseFourierModel(std::move(basis), std::move(entries));
}

double inverse_transform(const SparseFourierModel& model, std::span<const int> x) {
  return model.evaluate(x);
}

Truncation truncate(const SparseFourierModel& model,
                    const std::set<MultiIndex>& keep) {
  return truncate(model, [&keep](const MultiIndex& k, double) {
    return keep.count(k) > 0;
  });
}

Truncation truncate(const SparseFourierModel& model,
                    const std::function<bool(const MultiIndex&, double)>& keep) {
  std::map<MultiIndex, double> kept;
  double dropped_sq = 0.0;
  for (const auto& [k, c] : model.entries()) {
    if (keep(k, c)) {
      kept.emplace(k, c);
    } else {
      dropped_sq += c * c;
    }
  }
  return Truncation{SparseFourierModel(model.basis_ptr(), std::move(kept)),
                    std::sqrt(dropped_sq)};
}

double parseval_norm(const SparseFourierModel& model) {
  return model.parseval_norm();
}

}  // namespace fshap
