#include <cmath>

#include "fshap/format.hpp"
#include "fshap/gp.hpp"

namespace fshap {

std::vector<double> kl_coefficients(const std::vector<double>& spectrum,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> c(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (!(spectrum[i] >= 0.0)) {
      throw SpectrumError("eigenvalue " + std::to_string(i) + " is " +
                          format_g17(spectrum[i]) + "; must be >= 0");
    }
    c[i] = std::sqrt(spectrum[i]) * normal(rng);
  }
  return c;
}

GPSample kl_sample(const KernelOperator& op, std::uint64_t seed) {
  const auto& s = op.spectrum();  // SpectrumError when not diagonal
  std::mt19937_64 rng(seed);
  const std::vector<double> c = kl_coefficients(s, rng);
  // Dense synthesis through the factorized inverse pass.
  std::map<MultiIndex, double> entries;
  std::size_t flat = 0;
  for_each_state(op.space(), [&](std::span<const int> digits) {
    const double coef = c[flat++];
    if (coef != 0.0) {
      entries.emplace(MultiIndex(std::vector<int>(digits.begin(), digits.end())),
                      coef);
    }
  });
  SparseFourierModel model(op.basis_ptr(), std::move(entries));
  return GPSample{model.to_dense(), seed};
}

TailStatistics TailStatistics::from_spectrum(const KernelOperator& op,
                                             const std::set<MultiIndex>& keep) {
  const auto& s = op.spectrum();
  TailStatistics tail;
  std::size_t flat = 0;
  MultiIndex k;
  for_each_state(op.space(), [&](std::span<const int> digits) {
    const double value = s[flat++];
    k.digits.assign(digits.begin(), digits.end());
    if (keep.count(k)) return;
    tail.sigma1 += value;
    tail.sigma2 += value * value;
    tail.s_max = std::max(tail.s_max, value);
  });
  tail.validate();
  return tail;
}

void TailStatistics::validate() const {
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0) || !(s_max >= 0.0)) {
    throw ParameterError("tail statistics must be nonnegative");
  }
  // sigma2 = sum s_k^2 <= s_max * sum s_k; allow fp slack.
  if (sigma2 > sigma1 * s_max * (1.0 + 1e-12) + 1e-300) {
    throw ParameterError("tail statistics inconsistent: sigma2 " +
                         format_g17(sigma2) + " exceeds sigma1 * s_max " +
                         format_g17(sigma1 * s_max));
  }
}

double expected_residual_trace(const KernelOperator& op,
                               const std::set<MultiIndex>& keep) {
  // tr((I - P) K) = tr(K in L2(mu)) - sum_{k in keep} <atom_k, K atom_k>.
  const auto& sp = op.space();
  const std::vector<double> mass = op.measure().dense_mass();
  double trace = 0.0;
  for (Eigen::Index i = 0; i < op.matrix().rows(); ++i) {
    trace += op.matrix()(i, i) * mass[static_cast<std::size_t>(i)];
  }
  const auto n = static_cast<Eigen::Index>(sp.total_states());
  Eigen::VectorXd mass_v(n);
  for (Eigen::Index i = 0; i < n; ++i) mass_v(i) = mass[static_cast<std::size_t>(i)];
  Eigen::VectorXd atom(n);
  for (const auto& k : keep) {
    validate_multi_index(sp, k);
    std::size_t row = 0;
    for_each_state(sp, [&](std::span<const int> state) {
      atom(static_cast<Eigen::Index>(row)) = op.basis().atom_unchecked(k, state);
      ++row;
    });
    const Eigen::VectorXd weighted = mass_v.cwiseProduct(atom);
    trace -= weighted.dot(op.matrix() * weighted);
  }
  return trace;
}

double expected_shap_bound(const KernelOperator& op,
                           const std::set<MultiIndex>& keep, int feature,
                           std::span<const int> x) {
  TailStatistics tail = TailStatistics::from_spectrum(op, keep);
  const double wsq = tail_weight_sq_sum(op.basis(), keep, feature, x);
  return std::sqrt(wsq) * std::sqrt(tail.sigma1);
}

double high_probability_bound(const TailStatistics& tail, double weights_sq_sum,
                              double delta) {
  tail.validate();
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ParameterError("delta must lie in (0,1); got " + format_g17(delta));
  }
  if (!(weights_sq_sum >= 0.0)) {
    throw ParameterError("weights_sq_sum must be >= 0");
  }
  const double l = std::log(2.0 / delta);
  return std::sqrt(weights_sq_sum) *
         std::sqrt(tail.sigma1 + 2.0 * std::sqrt(tail.sigma2 * l) +
                   2.0 * tail.s_max * l);
}

double finite_width_bound(double weights_sq_sum, double tail_sigma1,
                          double eps_n) {
  if (!(weights_sq_sum >= 0.0) || !(tail_sigma1 >= 0.0) || !(eps_n >= 0.0)) {
    throw ParameterError("finite-width bound inputs must be nonnegative");
  }
  return std::sqrt(weights_sq_sum) * (std::sqrt(tail_sigma1) + eps_n);
}

namespace {

// Symmetric PSD square root; eigenvalues in [-tol, 0) clip to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* label) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw ParameterError(std::string(label) + " is not positive semidefinite "
                         "(eigenvalue " + format_g17(es.eigenvalues().minCoeff()) + ")");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double gaussian_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionError("covariances must be square with equal sizes");
  }
  const double asym = std::max((a - a.transpose()).cwiseAbs().maxCoeff(),
                               (b - b.transpose()).cwiseAbs().maxCoeff());
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  if (asym > 1e-10 * scale) {
    throw ParameterError("covariances must be symmetric");
  }
  const Eigen::MatrixXd ra = psd_sqrt(a, "first covariance");
  const Eigen::MatrixXd cross = psd_sqrt(ra * b * ra, "coupling product");
  const double w2_sq = a.trace() + b.trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(w2_sq, 0.0));
}

Eigen::MatrixXd fold_measure(const Eigen::MatrixXd& k, const ProductMeasure& mu) {
  const std::vector<double> mass = mu.dense_mass();
  if (static_cast<std::size_t>(k.rows()) != mass.size() || k.rows() != k.cols()) {
    throw DimensionError("matrix size does not match the state count");
  }
  Eigen::VectorXd root(static_cast<Eigen::Index>(mass.size()));
  for (std::size_t i = 0; i < mass.size(); ++i)
    root(static_cast<Eigen::Index>(i)) = std::sqrt(mass[i]);
  return root.asDiagonal() * k * root.asDiagonal();
}

}  // namespace fshap
