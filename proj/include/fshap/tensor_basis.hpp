#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fshap/coordinate_basis.hpp"
#include "fshap/multi_index.hpp"
#include "fshap/product_measure.hpp"

namespace fshap {

// Tag identifying how coordinate bases are constructed and sign-fixed.
// Serialized into model headers; loaders reject anything else.
inline constexpr const char* kBasisConvention = "mgs-monomial-positive-top/v1";

// Orthonormal tensor-product system over a product measure: the atom for
// multi-index k is atom_k(x) = prod_i coordinate(i).value(k_i, x_i). Atom 0 is
// the constant 1 and every other atom is mean-zero under the measure.
class TensorBasis {
 public:
  explicit TensorBasis(ProductMeasure measure);

  const ProductMeasure& measure() const { return measure_; }
  const FeatureSpace& space() const { return measure_.space(); }
  const CoordinateBasis& coordinate(int feature) const;
  std::string convention() const { return kBasisConvention; }

  // atom_k(x); validates both the index and the state.
  double atom(const MultiIndex& k, std::span<const int> x) const;
  // Same, but assumes k and x were validated by the caller (hot paths).
  double atom_unchecked(const MultiIndex& k, std::span<const int> x) const;

 private:
  ProductMeasure measure_;
  std::vector<CoordinateBasis> coordinates_;
};

// Convenience: build a shared basis handle (models and kernels share one).
std::shared_ptr<const TensorBasis> make_tensor_basis(ProductMeasure measure);

// atom_k(x) with full validation.
double evaluate_tensor_atom(const TensorBasis& basis, const MultiIndex& k,
                            std::span<const int> x);

// L2(mu) inner product of two dense tables in mixed-radix layout.
double inner_product(std::span<const double> f, std::span<const double> g,
                     const ProductMeasure& mu);

}  // namespace fshap
