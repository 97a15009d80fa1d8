#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fshap/tensor_basis.hpp"

namespace fshap {

// Coefficients with magnitude below this are dropped from sparse models; the
// threshold is far below every tolerance in the contract, so pruning never
// changes observable results.
inline constexpr double kCoefficientPruneThreshold = 1e-15;

// Dense table of a real-valued function over the whole space, mixed-radix
// layout (feature 0 slowest).
struct DensePredictor {
  FeatureSpace space;
  std::vector<double> values;

  DensePredictor(FeatureSpace s, std::vector<double> v);
  double operator()(std::span<const int> state) const {
    return values[space.state_index(state)];
  }
};

// Sparse generalized Fourier expansion: a map from multi-index to coefficient
// over a shared tensor basis. Immutable after construction; coefficients with
// |c| < kCoefficientPruneThreshold are dropped, and the maximum interaction
// order of the stored entries is cached.
class SparseFourierModel {
 public:
  SparseFourierModel(std::shared_ptr<const TensorBasis> basis,
                     std::map<MultiIndex, double> entries);

  const TensorBasis& basis() const { return *basis_; }
  std::shared_ptr<const TensorBasis> basis_ptr() const { return basis_; }
  const FeatureSpace& space() const { return basis_->space(); }
  const ProductMeasure& measure() const { return basis_->measure(); }
  const std::map<MultiIndex, double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int interaction_order() const { return interaction_order_; }

  // Stored coefficient, 0 for absent indices. Validates the index.
  double coefficient(const MultiIndex& k) const;
  // Pointwise synthesis sum_k c_k atom_k(x).
  double evaluate(std::span<const int> x) const;
  // Full dense synthesis via the factorized per-axis transform.
  std::vector<double> to_dense(std::size_t dense_limit = kDenseLimit) const;
  // sqrt(sum_k c_k^2): the L2(mu) norm by orthonormality.
  double parseval_norm() const;

 private:
  std::shared_ptr<const TensorBasis> basis_;
  std::map<MultiIndex, double> entries_;
  int interaction_order_ = 0;
};

// Analysis: dense table -> full coefficient map, O(N * sum_i m_i) via per-axis
// passes. DenseLimitError when the state count exceeds dense_limit.
SparseFourierModel forward_transform(const DensePredictor& predictor,
                                     std::shared_ptr<const TensorBasis> basis,
                                     std::size_t dense_limit = kDenseLimit);

// Synthesis at one point (alias of SparseFourierModel::evaluate).
double inverse_transform(const SparseFourierModel& model, std::span<const int> x);

struct Truncation {
  SparseFourierModel model;       // entries restricted to the kept set
  double residual_energy;         // sqrt(sum of squared dropped coefficients)
};

// Keeps exactly the stored entries whose index is in `keep`.
Truncation truncate(const SparseFourierModel& model,
                    const std::set<MultiIndex>& keep);
// Keeps stored entries where keep(k, coefficient) is true.
Truncation truncate(const SparseFourierModel& model,
                    const std::function<bool(const MultiIndex&, double)>& keep);

double parseval_norm(const SparseFourierModel& model);

// --- serialization (JSON Lines) -------------------------------------------
//
// Line 1 header: {"format":"fshap-model","version":1,"cardinalities":[...],
//                 "measure_hash":"...","basis":"...","measures":[[...],...]}
// Then one line per entry, in lexicographic index order:
//                {"k":[...],"coef":<%.17g>}
// The embedded measures let a model file stand alone; the hash lets callers
// cross-check an externally supplied measure.

void save_model_jsonl(const SparseFourierModel& model, const std::string& path);
SparseFourierModel load_model_jsonl(const std::string& path);
SparseFourierModel load_model_jsonl(const std::string& path,
                                    const ProductMeasure& measure);

}  // namespace fshap
