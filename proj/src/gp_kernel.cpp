#include <cmath>
#include <cstdio>
#include <numbers>

#include "fshap/format.hpp"
#include "fshap/gp.hpp"

namespace fshap {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-8;        // relative to ||K||
constexpr double kLayerClipTol = 1e-10; // eigenvalues in [-clip, 0) -> 0
constexpr double kLayerErrorTol = 1e-6; // below -this: recursion fails

void check_kernel_matrix(const Eigen::MatrixXd& m, std::size_t states) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != states) {
    throw DimensionError("kernel matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + "; space has " +
                         std::to_string(states) + " states");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    throw ParameterError("kernel matrix asymmetry " + format_g17(asym) +
                         " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  const double lambda_scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lambda_min < -kPsdTol * std::max(1.0, lambda_scale)) {
    throw ParameterError("kernel matrix has eigenvalue " + format_g17(lambda_min) +
                         "; not positive semidefinite");
  }
}

double relu_moment(double k11, double k22, double k12) {
  // E[relu(U) relu(V)] for centered Gaussians: arc-cosine form
  // sqrt(k11 k22) (sin t + (pi - t) cos t) / (2 pi), t = arccos(rho).
  const double denom = std::sqrt(k11 * k22);
  if (!(denom > 0.0)) return 0.0;  // a degenerate coordinate is a.s. zero
  const double rho = std::clamp(k12 / denom, -1.0, 1.0);
  const double t = std::acos(rho);
  // cos(t) == rho by construction.
  return denom * (std::sin(t) + (std::numbers::pi - t) * rho) /
         (2.0 * std::numbers::pi);
}

double erf_moment(double k11, double k22, double k12) {
  // E[erf(U) erf(V)] = (2/pi) asin(2 k12 / sqrt((1+2 k11)(1+2 k22))).
  const double denom = std::sqrt((1.0 + 2.0 * k11) * (1.0 + 2.0 * k22));
  const double arg = std::clamp(2.0 * k12 / denom, -1.0, 1.0);
  return (2.0 / std::numbers::pi) * std::asin(arg);
}

struct McMoment {
  double mean;
  double se;
};

McMoment mc_moment(const MonteCarloActivation& act, double k11, double k22,
                   double k12, std::mt19937_64& rng) {
  if (act.samples <= 1) throw ParameterError("Monte-Carlo activation needs samples > 1");
  if (!act.fn) throw ParameterError("Monte-Carlo activation needs a function");
  // Cholesky of the 2x2 block: U = a z1, V = b z1 + c z2.
  const double a = std::sqrt(std::max(k11, 0.0));
  const double b = a > 0.0 ? k12 / a : 0.0;
  const double c = std::sqrt(std::max(k22 - b * b, 0.0));
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < act.samples; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double v = act.fn(a * z1) * act.fn(b * z1 + c * z2);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(act.samples - 1);
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(act.samples))};
}

}  // namespace

KernelOperator::KernelOperator(std::shared_ptr<const TensorBasis> basis,
                               Eigen::MatrixXd matrix) {
  if (!basis) throw ParameterError("kernel operator needs a basis");
  const std::size_t states = basis->space().total_states();
  if (states > kKernelStateLimit) {
    throw DenseLimitError("kernel matrix needs " + std::to_string(states) +
                          "^2 entries; state limit is " +
                          std::to_string(kKernelStateLimit));
  }
  check_kernel_matrix(matrix, states);
  basis_ = std::move(basis);
  matrix_ = std::move(matrix);
}

KernelOperator KernelOperator::from_spectrum(
    std::shared_ptr<const TensorBasis> basis, std::vector<double> spectrum) {
  if (!basis) throw ParameterError("kernel operator needs a basis");
  const auto& space = basis->space();
  const std::size_t states = space.total_states();
  if (states > kKernelStateLimit) {
    throw DenseLimitError("kernel matrix needs " + std::to_string(states) +
                          "^2 entries; state limit is " +
                          std::to_string(kKernelStateLimit));
  }
  if (spectrum.size() != states) {
    throw SpectrumError("spectrum has " + std::to_string(spectrum.size()) +
                        " eigenvalues; index set has " + std::to_string(states));
  }
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (!(spectrum[i] >= 0.0) || !std::isfinite(spectrum[i])) {
      throw SpectrumError("eigenvalue " + std::to_string(i) + " is " +
                          format_g17(spectrum[i]) + "; must be >= 0");
    }
  }
  // K = B diag(s) B^T with B(x, k) = atom_k(x).
  const auto n = static_cast<Eigen::Index>(states);
  Eigen::MatrixXd b(n, n);
  std::size_t col = 0;
  MultiIndex k;
  for_each_state(space, [&](std::span<const int> digits) {
    k.digits.assign(digits.begin(), digits.end());
    std::size_t row = 0;
    for_each_state(space, [&](std::span<const int> state) {
      b(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
          basis->atom_unchecked(k, state);
      ++row;
    });
    ++col;
  });
  Eigen::VectorXd s(n);
  for (std::size_t i = 0; i < states; ++i)
    s(static_cast<Eigen::Index>(i)) = spectrum[i];
  KernelOperator op;
  op.basis_ = std::move(basis);
  op.matrix_ = b * s.asDiagonal() * b.transpose();
  op.matrix_ = ((op.matrix_ + op.matrix_.transpose()) / 2.0).eval();
  op.spectrum_ = std::move(spectrum);
  return op;
}

KernelOperator KernelOperator::identity(std::shared_ptr<const TensorBasis> basis) {
  if (!basis) throw ParameterError("kernel operator needs a basis");
  const std::size_t states = basis->space().total_states();
  return from_spectrum(std::move(basis), std::vector<double>(states, 1.0));
}

const std::vector<double>& KernelOperator::spectrum() const {
  if (!spectrum_) {
    throw SpectrumError("operator is not diagonal in the tensor basis; "
                        "no spectrum available");
  }
  return *spectrum_;
}

double KernelOperator::eigenvalue(const MultiIndex& k) const {
  validate_multi_index(space(), k);
  return spectrum()[space().state_index(k.digits)];
}

Eigen::MatrixXd KernelOperator::basis_coefficient_matrix() const {
  // A = (M B)^T K (M B) with M = diag(mass); A(k,k') = <atom_k, K atom_k'>.
  const auto& sp = space();
  const auto n = static_cast<Eigen::Index>(sp.total_states());
  Eigen::MatrixXd mb(n, n);
  const std::vector<double> mass = measure().dense_mass();
  std::size_t col = 0;
  MultiIndex k;
  for_each_state(sp, [&](std::span<const int> digits) {
    k.digits.assign(digits.begin(), digits.end());
    std::size_t row = 0;
    for_each_state(sp, [&](std::span<const int> state) {
      mb(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
          mass[row] * basis_->atom_unchecked(k, state);
      ++row;
    });
    ++col;
  });
  return mb.transpose() * matrix_ * mb;
}

bool KernelOperator::try_diagonalize(double tol) {
  if (spectrum_) return true;
  const Eigen::MatrixXd a = basis_coefficient_matrix();
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const Eigen::MatrixXd off = a - Eigen::MatrixXd(a.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > tol * scale) return false;
  std::vector<double> s(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) s[static_cast<std::size_t>(i)] =
      std::max(a(i, i), 0.0);
  spectrum_ = std::move(s);
  return true;
}

double KernelOperator::max_diagonal_residual() const {
  const auto& s = spectrum();
  // ||K atom_k - s_k atom_k||_mu via the value-space action of the operator.
  const auto& sp = space();
  const auto n = static_cast<Eigen::Index>(sp.total_states());
  const std::vector<double> mass = measure().dense_mass();
  Eigen::VectorXd mass_v(n);
  for (Eigen::Index i = 0; i < n; ++i) mass_v(i) = mass[static_cast<std::size_t>(i)];
  double worst = 0.0;
  std::size_t flat = 0;
  MultiIndex k;
  for_each_state(sp, [&](std::span<const int> digits) {
    k.digits.assign(digits.begin(), digits.end());
    Eigen::VectorXd atom(n);
    std::size_t row = 0;
    for_each_state(sp, [&](std::span<const int> state) {
      atom(static_cast<Eigen::Index>(row)) = basis_->atom_unchecked(k, state);
      ++row;
    });
    const Eigen::VectorXd applied = matrix_ * mass_v.cwiseProduct(atom);
    const Eigen::VectorXd diff = applied - s[flat] * atom;
    worst = std::max(worst, std::sqrt(diff.cwiseAbs2().dot(mass_v)));
    ++flat;
  });
  return worst;
}

Eigen::MatrixXd layer_kernel_gram(const Eigen::MatrixXd& base,
                                  const LayerRecursion& recursion,
                                  Eigen::MatrixXd* se_out) {
  if (base.rows() != base.cols() || base.rows() == 0) {
    throw ParameterError("base Gram must be square and nonempty");
  }
  if (recursion.depth < 1) throw ParameterError("recursion depth must be >= 1");
  if (recursion.sigma_w2 < 0.0 || recursion.sigma_b2 < 0.0) {
    throw ParameterError("variance scales must be nonnegative");
  }
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -kPsdTol * scale) {
      throw ParameterError("base Gram is not positive semidefinite");
    }
  }

  const Eigen::Index n = base.rows();
  Eigen::MatrixXd g = base;
  Eigen::MatrixXd se = Eigen::MatrixXd::Zero(n, n);
  std::mt19937_64 mc_rng;
  const auto* mc = std::get_if<MonteCarloActivation>(&recursion.activation);
  if (mc != nullptr) mc_rng.seed(mc->seed);

  for (int layer = 0; layer < recursion.depth; ++layer) {
    Eigen::MatrixXd next(n, n);
    se.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        double moment;
        if (std::holds_alternative<ReluActivation>(recursion.activation)) {
          moment = relu_moment(g(i, i), g(j, j), g(i, j));
        } else if (std::holds_alternative<ErfActivation>(recursion.activation)) {
          moment = erf_moment(g(i, i), g(j, j), g(i, j));
        } else {
          const McMoment est = mc_moment(*mc, g(i, i), g(j, j), g(i, j), mc_rng);
          moment = est.mean;
          se(i, j) = se(j, i) = recursion.sigma_w2 * est.se;
        }
        next(i, j) = next(j, i) = recursion.sigma_b2 + recursion.sigma_w2 * moment;
      }
    }
    // Repair round-off PSD violations; refuse anything beyond noise scale.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(next);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    double error_floor = kLayerErrorTol * scale;
    if (mc != nullptr) {
      // MC noise moves eigenvalues by up to ~||SE|| * dim; widen accordingly.
      error_floor = std::max(error_floor,
                             8.0 * se.maxCoeff() * static_cast<double>(n));
    }
    const double lambda_min = es.eigenvalues().minCoeff();
    if (lambda_min < -error_floor) {
      throw KernelRecursionError("layer " + std::to_string(layer + 1) +
                                 " kernel has eigenvalue " + format_g17(lambda_min) +
                                 "; recursion left the PSD cone");
    }
    if (lambda_min < 0.0) {
      std::fprintf(stderr,
                   "[fshap] layer %d kernel: clipping eigenvalues in [%.3g, 0)\n",
                   layer + 1, lambda_min);
      Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
      next = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
      next = ((next + next.transpose()) / 2.0).eval();
    }
    g = std::move(next);
  }
  if (se_out != nullptr) *se_out = se;
  return g;
}

Eigen::MatrixXd one_hot_base_gram(const FeatureSpace& space, double sigma_w2,
                                  double sigma_b2) {
  if (sigma_w2 < 0.0 || sigma_b2 < 0.0) {
    throw ParameterError("variance scales must be nonnegative");
  }
  if (space.total_states() > kKernelStateLimit) {
    throw DenseLimitError("base Gram needs " + std::to_string(space.total_states()) +
                          "^2 entries; state limit is " +
                          std::to_string(kKernelStateLimit));
  }
  const auto n_states = static_cast<Eigen::Index>(space.total_states());
  const int n = space.feature_count();
  Eigen::MatrixXd g(n_states, n_states);
  std::vector<std::vector<int>> states;
  states.reserve(static_cast<std::size_t>(n_states));
  for_each_state(space, [&](std::span<const int> s) {
    states.emplace_back(s.begin(), s.end());
  });
  for (Eigen::Index i = 0; i < n_states; ++i) {
    for (Eigen::Index j = i; j < n_states; ++j) {
      int overlap = 0;
      for (int f = 0; f < n; ++f) {
        overlap += states[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)] ==
                   states[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
      }
      g(i, j) = g(j, i) = sigma_b2 + sigma_w2 * static_cast<double>(overlap) / n;
    }
  }
  return g;
}

KernelOperator layer_kernel_operator(std::shared_ptr<const TensorBasis> basis,
                                     const LayerRecursion& recursion) {
  if (!basis) throw ParameterError("kernel operator needs a basis");
  const Eigen::MatrixXd base =
      one_hot_base_gram(basis->space(), recursion.sigma_w2, recursion.sigma_b2);
  Eigen::MatrixXd gram = layer_kernel_gram(base, recursion);
  KernelOperator op(basis, std::move(gram));
  op.try_diagonalize();
  return op;
}

}  // namespace fshap
