#pragma once

#include <vector>

#include "fshap/errors.hpp"

namespace fshap {

// Orthonormal function system on one coordinate under its marginal measure:
// table(mode, state) with mode 0 the constant 1 and every mode >= 1 mean-zero.
// Orthonormality: sum_x table(a,x) table(b,x) mu(x) = [a == b].
class CoordinateBasis {
 public:
  CoordinateBasis(int feature, std::vector<std::vector<double>> table);

  int feature() const { return feature_; }
  // Number of modes == number of states == m_i.
  int size() const { return static_cast<int>(table_.size()); }
  double value(int mode, int state) const;
  const std::vector<double>& row(int mode) const;

 private:
  int feature_;
  std::vector<std::vector<double>> table_;
};

// Builds the system by modified Gram-Schmidt on the monomial family
// {1, x, x^2, ...} in L2(marginal), with each mode >= 1 scaled so its value at
// the top state m_i - 1 is positive. The marginal must be a strictly positive
// probability vector; a numerically dependent monomial column raises
// BasisConstructionError.
CoordinateBasis build_coordinate_basis(int feature,
                                       const std::vector<double>& marginal);

}  // namespace fshap
