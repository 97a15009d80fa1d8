#include "fshap/tensor_basis.hpp"

namespace fshap {

TensorBasis::TensorBasis(ProductMeasure measure) : measure_(std::move(measure)) {
  const auto& space = measure_.space();
  coordinates_.reserve(static_cast<std::size_t>(space.feature_count()));
  for (int i = 0; i < space.feature_count(); ++i) {
    coordinates_.push_back(build_coordinate_basis(i, measure_.marginal(i)));
  }
}

const CoordinateBasis& TensorBasis::coordinate(int feature) const {
  space().cardinality(feature);  // range check
  return coordinates_[static_cast<std::size_t>(feature)];
}

double TensorBasis::atom(const MultiIndex& k, std::span<const int> x) const {
  validate_multi_index(space(), k);
  space().validate_state(x);
  return atom_unchecked(k, x);
}

double TensorBasis::atom_unchecked(const MultiIndex& k,
                                   std::span<const int> x) const {
  double v = 1.0;
  for (int i = 0; i < k.size(); ++i) {
    const int mode = k[i];
    if (mode != 0) {
      v *= coordinates_[static_cast<std::size_t>(i)].value(
          mode, x[static_cast<std::size_t>(i)]);
    }
  }
  return v;
}

std::shared_ptr<const TensorBasis> make_tensor_basis(ProductMeasure measure) {
  return std::make_shared<const TensorBasis>(std::move(measure));
}

double evaluate_tensor_atom(const TensorBasis& basis, const MultiIndex& k,
                            std::span<const int> x) {
  return basis.atom(k, x);
}

double inner_product(std::span<const double> f, std::span<const double> g,
                     const ProductMeasure& mu) {
  const std::size_t n = mu.space().total_states();
  if (f.size() != n || g.size() != n) {
    throw DimensionError("inner product tables have sizes " +
                         std::to_string(f.size()) + " and " +
                         std::to_string(g.size()) + "; space has " +
                         std::to_string(n) + " states");
  }
  const int features = mu.space().feature_count();
  double acc = 0.0;
  std::size_t idx = 0;
  for_each_state(mu.space(), [&](std::span<const int> state) {
    double w = 1.0;
    for (int i = 0; i < features; ++i) {
      w *= mu.marginal(i)[static_cast<std::size_t>(state[static_cast<std::size_t>(i)])];
    }
    acc += f[idx] * g[idx] * w;
    ++idx;
  });
  return acc;
}

}  // namespace fshap
