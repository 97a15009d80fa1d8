#include <cmath>
#include <cstdio>
#include <map>

#include <Eigen/Dense>

#include "fshap/errors.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

SparseFourierModel fit_coefficients(std::shared_ptr<const TensorBasis> basis,
                                    const std::vector<MultiIndex>& atoms,
                                    const std::vector<std::vector<int>>& rows,
                                    std::span<const double> targets,
                                    double ridge_lambda,
                                    std::span<const double> row_weights) {
  if (basis == nullptr) throw ParameterError("fit_coefficients: null basis");
  if (rows.empty()) throw DataError("fit_coefficients: empty dataset");
  if (targets.size() != rows.size())
    throw DataError("fit_coefficients: targets/rows size mismatch");
  if (!row_weights.empty() && row_weights.size() != rows.size())
    throw DataError("fit_coefficients: row_weights/rows size mismatch");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda))
    throw ParameterError("fit_coefficients: ridge lambda must be finite and >= 0");
  for (double t : targets)
    if (!std::isfinite(t))
      throw NumericError("fit_coefficients: non-finite target value");
  for (double w : row_weights)
    if (!std::isfinite(w) || w < 0.0)
      throw DataError("fit_coefficients: row weights must be finite and >= 0");

  const FeatureSpace& space = basis->space();
  for (const auto& row : rows) space.validate_state(row);

  // Design columns: the constant atom first, then the unique selected atoms
  // in their given order.
  std::vector<MultiIndex> design_atoms;
  design_atoms.push_back(MultiIndex::zeros(space.feature_count()));
  {
    std::map<MultiIndex, bool> seen;
    seen[design_atoms.front()] = true;
    for (const MultiIndex& k : atoms) {
      validate_multi_index(space, k);
      if (!seen.emplace(k, true).second) continue;
      design_atoms.push_back(k);
    }
  }

  const Eigen::Index r_count = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(design_atoms.size());
  if (p > r_count)
    std::fprintf(stderr,
                 "[fit_coefficients] %lld atoms but only %lld rows; "
                 "the fit is underdetermined\n",
                 static_cast<long long>(p), static_cast<long long>(r_count));

  Eigen::MatrixXd design(r_count, p);
  for (Eigen::Index r = 0; r < r_count; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < p; ++c)
      design(r, c) =
          basis->atom_unchecked(design_atoms[static_cast<std::size_t>(c)], row);
  }
  Eigen::VectorXd y(r_count);
  for (Eigen::Index r = 0; r < r_count; ++r)
    y[r] = targets[static_cast<std::size_t>(r)];

  Eigen::MatrixXd normal;
  Eigen::VectorXd rhs;
  if (row_weights.empty()) {
    normal = design.transpose() * design;
    rhs = design.transpose() * y;
  } else {
    Eigen::VectorXd w(r_count);
    for (Eigen::Index r = 0; r < r_count; ++r)
      w[r] = row_weights[static_cast<std::size_t>(r)];
    if (w.sum() <= 0.0)
      throw DataError("fit_coefficients: row weights sum to zero");
    normal = design.transpose() * w.asDiagonal() * design;
    rhs = design.transpose() * (w.asDiagonal() * y);
  }
  normal.diagonal().array() += ridge_lambda;

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success)
    throw FitError("fit_coefficients: normal equations are not solvable");
  const Eigen::VectorXd coef = ldlt.solve(rhs);
  if (!coef.allFinite())
    throw FitError("fit_coefficients: non-finite solution");
  const double residual = (normal * coef - rhs).norm();
  if (residual > 1e-8 * std::max(1.0, rhs.norm()))
    throw FitError("fit_coefficients: normal equations are singular "
                   "(residual " + std::to_string(residual) + ")");

  std::map<MultiIndex, double> entries;
  for (Eigen::Index c = 0; c < p; ++c)
    entries[design_atoms[static_cast<std::size_t>(c)]] = coef[c];
  return SparseFourierModel(std::move(basis), std::move(entries));
}

}  // namespace fshap::pipeline
