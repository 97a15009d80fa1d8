#include "fshap/coordinate_basis.hpp"

#include <cmath>
#include <string>

#include "fshap/format.hpp"

namespace fshap {

CoordinateBasis::CoordinateBasis(int feature,
                                 std::vector<std::vector<double>> table)
    : feature_(feature), table_(std::move(table)) {
  if (table_.size() < 2) {
    throw DimensionError("coordinate basis needs >= 2 modes");
  }
  for (const auto& row : table_) {
    if (row.size() != table_.size()) {
      throw DimensionError("coordinate basis table must be square");
    }
  }
}

double CoordinateBasis::value(int mode, int state) const {
  if (mode < 0 || mode >= size() || state < 0 || state >= size()) {
    throw DimensionError("mode " + std::to_string(mode) + " / state " +
                         std::to_string(state) + " outside [0, " +
                         std::to_string(size()) + ")");
  }
  return table_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(state)];
}

const std::vector<double>& CoordinateBasis::row(int mode) const {
  if (mode < 0 || mode >= size()) {
    throw DimensionError("mode " + std::to_string(mode) + " outside [0, " +
                         std::to_string(size()) + ")");
  }
  return table_[static_cast<std::size_t>(mode)];
}

CoordinateBasis build_coordinate_basis(int feature,
                                       const std::vector<double>& marginal) {
  const int m = static_cast<int>(marginal.size());
  if (m < 2) {
    throw DimensionError("feature " + std::to_string(feature) +
                         " has cardinality " + std::to_string(m) +
                         "; a constant feature has no basis");
  }
  double sum = 0.0;
  for (double p : marginal) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw MeasureSupportError("feature " + std::to_string(feature) +
                                " marginal has non-positive weight " +
                                format_g17(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw MeasureSupportError("feature " + std::to_string(feature) +
                              " marginal sums to " + format_g17(sum));
  }

  const auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (int x = 0; x < m; ++x)
      s += a[static_cast<std::size_t>(x)] * b[static_cast<std::size_t>(x)] *
           marginal[static_cast<std::size_t>(x)];
    return s;
  };

  // Monomials on the rescaled nodes x/(m-1) in [0,1]; the rescaling spans the
  // same nested subspaces, so the orthonormal system is unchanged while the
  // Gram matrix stays well conditioned for larger m.
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(m));
  for (int degree = 0; degree < m; ++degree) {
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int x = 0; x < m; ++x) {
      v[static_cast<std::size_t>(x)] =
          std::pow(static_cast<double>(x) / (m - 1), degree);
    }
    // Modified Gram-Schmidt with one reorthogonalization pass.
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < degree; ++j) {
        const double c = dot(v, rows[static_cast<std::size_t>(j)]);
        for (int x = 0; x < m; ++x)
          v[static_cast<std::size_t>(x)] -=
              c * rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)];
      }
    }
    const double norm = std::sqrt(dot(v, v));
    if (!(norm > 1e-10)) {
      throw BasisConstructionError("feature " + std::to_string(feature) +
                                   ": monomial of degree " + std::to_string(degree) +
                                   " is numerically dependent (norm " +
                                   format_g17(norm) + ")");
    }
    // Positive value at the top state fixes the sign.
    const double sign = v[static_cast<std::size_t>(m - 1)] < 0.0 ? -1.0 : 1.0;
    for (int x = 0; x < m; ++x) v[static_cast<std::size_t>(x)] *= sign / norm;
    rows.push_back(std::move(v));
  }
  // The constant mode is exactly 1 for a probability marginal; pin it so
  // mode-0 atoms carry no rounding noise.
  for (int x = 0; x < m; ++x) rows[0][static_cast<std::size_t>(x)] = 1.0;
  return CoordinateBasis(feature, std::move(rows));
}

}  // namespace fshap
