#include <cmath>

#include "fshap/gp.hpp"

namespace fshap {

MonteCarloStats mc_residual_energy(const KernelOperator& op,
                                   const std::set<MultiIndex>& keep,
                                   long samples, std::uint64_t seed) {
  if (samples < 2) throw ParameterError("Monte-Carlo needs samples >= 2");
  const auto& sp = op.space();
  const auto n = static_cast<Eigen::Index>(sp.total_states());

  // Value-space factor K = F F^T via symmetric eigendecomposition.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix());
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-8 * scale) {
    throw ParameterError("kernel matrix is not positive semidefinite");
  }
  const Eigen::MatrixXd factor =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  // Orthonormal rows of kept atoms weighted by the measure: energy of a draw
  // splits as ||H||^2_mu - sum_{k in keep} <H, atom_k>^2 (Pythagoras).
  const std::vector<double> mass = op.measure().dense_mass();
  Eigen::VectorXd mass_v(n);
  for (Eigen::Index i = 0; i < n; ++i) mass_v(i) = mass[static_cast<std::size_t>(i)];
  Eigen::MatrixXd kept(static_cast<Eigen::Index>(keep.size()), n);
  Eigen::Index krow = 0;
  for (const auto& k : keep) {
    validate_multi_index(sp, k);
    std::size_t col = 0;
    for_each_state(sp, [&](std::span<const int> state) {
      kept(krow, static_cast<Eigen::Index>(col)) =
          op.basis().atom_unchecked(k, state) * mass[col];
      ++col;
    });
    ++krow;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < samples; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(rng);
    const Eigen::VectorXd h = factor * z;
    double energy = h.cwiseAbs2().dot(mass_v);
    if (kept.rows() > 0) {
      const Eigen::VectorXd coef = kept * h;
      energy -= coef.squaredNorm();
    }
    const double delta = energy - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (energy - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return MonteCarloStats{mean,
                         std::sqrt(std::max(var, 0.0) / static_cast<double>(samples)),
                         samples};
}

GapExperiment mc_shap_gap(const KernelOperator& op,
                          const std::set<MultiIndex>& keep, int feature,
                          std::span<const int> x, long samples,
                          std::uint64_t seed, double threshold) {
  if (samples < 2) throw ParameterError("Monte-Carlo needs samples >= 2");
  const auto& s = op.spectrum();  // SpectrumError when not diagonal
  const auto& sp = op.space();
  sp.validate_state(x);
  sp.cardinality(feature);  // range check

  // Signed per-index attribution coefficients on the tail: the gap of a draw
  // is |sum_{k not kept, k_feature != 0} c_k atom_k(x) / order(k)|.
  std::vector<double> tail_sqrt_s;
  std::vector<double> tail_coef;
  std::size_t flat = 0;
  MultiIndex k;
  for_each_state(sp, [&](std::span<const int> digits) {
    const double value = s[flat++];
    k.digits.assign(digits.begin(), digits.end());
    if (keep.count(k)) return;
    if (k[feature] == 0 || value == 0.0) return;
    tail_sqrt_s.push_back(std::sqrt(value));
    tail_coef.push_back(op.basis().atom_unchecked(k, x) / k.order());
  });

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  long violations = 0;
  for (long i = 0; i < samples; ++i) {
    double gap = 0.0;
    for (std::size_t t = 0; t < tail_coef.size(); ++t) {
      gap += tail_sqrt_s[t] * normal(rng) * tail_coef[t];
    }
    gap = std::abs(gap);
    if (threshold > 0.0 && gap > threshold) ++violations;
    const double delta = gap - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (gap - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  GapExperiment out;
  out.gap = MonteCarloStats{
      mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(samples)), samples};
  out.violation_rate =
      static_cast<double>(violations) / static_cast<double>(samples);
  return out;
}

std::vector<std::vector<double>> finite_width_tables(
    const FeatureSpace& space, int width, int hidden_layers, double sigma_w2,
    double sigma_b2, long count, std::uint64_t seed) {
  if (width < 1) throw ParameterError("width must be >= 1");
  if (hidden_layers < 1) throw ParameterError("hidden_layers must be >= 1");
  if (count < 1) throw ParameterError("count must be >= 1");
  if (sigma_w2 < 0.0 || sigma_b2 < 0.0) {
    throw ParameterError("variance scales must be nonnegative");
  }
  const std::size_t states = space.total_states();
  if (states > kKernelStateLimit) {
    throw DenseLimitError("finite-width tables need " + std::to_string(states) +
                          " states; limit is " + std::to_string(kKernelStateLimit));
  }
  const int n = space.feature_count();
  int onehot_dim = 0;
  for (int i = 0; i < n; ++i) onehot_dim += space.cardinality(i);

  // One-hot encodings of every state, column per state.
  Eigen::MatrixXd enc = Eigen::MatrixXd::Zero(onehot_dim, static_cast<Eigen::Index>(states));
  std::size_t col = 0;
  for_each_state(space, [&](std::span<const int> state) {
    int offset = 0;
    for (int i = 0; i < n; ++i) {
      enc(offset + state[static_cast<std::size_t>(i)], static_cast<Eigen::Index>(col)) = 1.0;
      offset += space.cardinality(i);
    }
    ++col;
  });

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto fill_gaussian = [&](Eigen::MatrixXd& m, double stddev) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = stddev * normal(rng);
  };

  const double sw = std::sqrt(sigma_w2);
  const double sb = std::sqrt(sigma_b2);
  std::vector<std::vector<double>> tables;
  tables.reserve(static_cast<std::size_t>(count));
  for (long e = 0; e < count; ++e) {
    // First affine layer: fan-in = feature count (each feature lights exactly
    // one slot), matching the one-hot base Gram sigma_b2 + sigma_w2 overlap/n.
    Eigen::MatrixXd w1(width, onehot_dim);
    fill_gaussian(w1, sw / std::sqrt(static_cast<double>(n)));
    Eigen::VectorXd b1(width);
    for (Eigen::Index r = 0; r < width; ++r) b1(r) = sb * normal(rng);
    Eigen::MatrixXd act = ((w1 * enc).colwise() + b1).cwiseMax(0.0);
    for (int layer = 1; layer < hidden_layers; ++layer) {
      Eigen::MatrixXd w(width, width);
      fill_gaussian(w, sw / std::sqrt(static_cast<double>(width)));
      Eigen::VectorXd b(width);
      for (Eigen::Index r = 0; r < width; ++r) b(r) = sb * normal(rng);
      act = ((w * act).colwise() + b).cwiseMax(0.0);
    }
    Eigen::MatrixXd readout(1, width);
    fill_gaussian(readout, sw / std::sqrt(static_cast<double>(width)));
    const double bias = sb * normal(rng);
    const Eigen::RowVectorXd values = (readout * act).array() + bias;
    tables.emplace_back(values.data(), values.data() + values.size());
  }
  return tables;
}

double estimate_epsilon_n(const std::vector<std::vector<double>>& tables,
                          const KernelOperator& limit) {
  if (tables.empty()) throw ParameterError("ensemble is empty");
  const std::size_t states = limit.space().total_states();
  const auto n = static_cast<Eigen::Index>(states);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd h(n);
  for (const auto& table : tables) {
    if (table.size() != states) {
      throw DimensionError("ensemble table size does not match the space");
    }
    for (Eigen::Index i = 0; i < n; ++i) h(i) = table[static_cast<std::size_t>(i)];
    second.noalias() += h * h.transpose();
  }
  second /= static_cast<double>(tables.size());
  return gaussian_w2(fold_measure(second, limit.measure()),
                     fold_measure(limit.matrix(), limit.measure()));
}

}  // namespace fshap
