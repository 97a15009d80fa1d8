#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fshap/shap.hpp"

namespace fshap {

// Kernel matrices are dense |Y| x |Y|; cap the state count well below the
// generic dense limit so quadratic storage stays sane.
inline constexpr std::size_t kKernelStateLimit = std::size_t{1} << 12;

// Covariance operator of a centered Gaussian process on the space, acting on
// L2(mu): (Kf)(x) = sum_y K(x,y) f(y) mu(y). Stores the value-space matrix
// K(x,y) in mixed-radix state order, plus (when known) the eigenvalues s_k of
// the operator in the tensor basis ("spectrum"), one per multi-index in flat
// order. diagonal_in_basis() is true exactly when the spectrum is available.
class KernelOperator {
 public:
  // Explicit matrix; validated symmetric (1e-10) and PSD (lambda_min >=
  // -1e-8 * ||K||). No spectrum is assumed.
  KernelOperator(std::shared_ptr<const TensorBasis> basis, Eigen::MatrixXd matrix);

  // Diagonal operator sum_k s_k atom_k(x) atom_k(y) from nonnegative
  // eigenvalues in flat multi-index order (SpectrumError on negatives).
  static KernelOperator from_spectrum(std::shared_ptr<const TensorBasis> basis,
                                      std::vector<double> spectrum);
  // Identity operator on L2(mu): all eigenvalues 1.
  static KernelOperator identity(std::shared_ptr<const TensorBasis> basis);

  const TensorBasis& basis() const { return *basis_; }
  std::shared_ptr<const TensorBasis> basis_ptr() const { return basis_; }
  const ProductMeasure& measure() const { return basis_->measure(); }
  const FeatureSpace& space() const { return basis_->space(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  bool diagonal_in_basis() const { return spectrum_.has_value(); }
  // SpectrumError when the operator is not basis-diagonal.
  const std::vector<double>& spectrum() const;
  double eigenvalue(const MultiIndex& k) const;

  // Operator matrix in the tensor basis: A(k,k') = <atom_k, K atom_k'>_mu.
  Eigen::MatrixXd basis_coefficient_matrix() const;
  // Tries to extract a spectrum: succeeds when every off-diagonal entry of
  // the basis-coefficient matrix is within tol * max|diagonal|.
  bool try_diagonalize(double tol = 1e-8);
  // max_k ||K atom_k - s_k atom_k||_{L2(mu)}; requires a spectrum.
  double max_diagonal_residual() const;

 private:
  KernelOperator() = default;
  std::shared_ptr<const TensorBasis> basis_;
  Eigen::MatrixXd matrix_;
  std::optional<std::vector<double>> spectrum_;
};

// One Karhunen-Loeve draw: dense value table over the space plus the seed
// that produced it.
struct GPSample {
  std::vector<double> values;
  std::uint64_t seed = 0;
};

// Coefficient draw c_k = sqrt(s_k) Z_k, Z_k iid standard normal, flat order.
std::vector<double> kl_coefficients(const std::vector<double>& spectrum,
                                    std::mt19937_64& rng);
// Full KL draw h = sum_k c_k atom_k; requires a basis-diagonal operator.
GPSample kl_sample(const KernelOperator& op, std::uint64_t seed);

// Tail eigenvalue statistics feeding the concentration bound.
struct TailStatistics {
  double sigma1 = 0.0;  // sum of tail eigenvalues
  double sigma2 = 0.0;  // sum of squared tail eigenvalues
  double s_max = 0.0;   // largest tail eigenvalue

  // Aggregates spectrum entries whose multi-index is NOT in keep.
  static TailStatistics from_spectrum(const KernelOperator& op,
                                      const std::set<MultiIndex>& keep);
  void validate() const;  // nonneg, sigma2 <= sigma1 * s_max (ParameterError)
};

// Mean residual energy E||(I - P_keep) H||^2 = tr((I - P_keep) K); works for
// any kernel operator via the basis-coefficient trace.
double expected_residual_trace(const KernelOperator& op,
                               const std::set<MultiIndex>& keep);

// Mean-gap certificate sqrt(tail weight^2 sum) * sqrt(tail eigenvalue sum)
// for feature `feature` at x; requires a basis-diagonal operator.
double expected_shap_bound(const KernelOperator& op,
                           const std::set<MultiIndex>& keep, int feature,
                           std::span<const int> x);

// High-probability gap certificate at confidence 1 - delta:
// sqrt(weights_sq_sum) * sqrt(sigma1 + 2 sqrt(sigma2 L) + 2 s_max L),
// L = log(2/delta). delta in (0,1), weights_sq_sum >= 0.
double high_probability_bound(const TailStatistics& tail, double weights_sq_sum,
                              double delta);

// Finite-width certificate sqrt(weights_sq_sum) * (sqrt(tail_sigma1) + eps_n).
double finite_width_bound(double weights_sq_sum, double tail_sigma1,
                          double eps_n);

// --- layer-kernel recursion -------------------------------------------------

struct ReluActivation {};
struct ErfActivation {};
// Estimates E[act(U) act(V)] from `samples` bivariate-normal draws.
struct MonteCarloActivation {
  std::function<double(double)> fn;
  long samples = 0;
  std::uint64_t seed = 0;
};
using LayerActivation =
    std::variant<ReluActivation, ErfActivation, MonteCarloActivation>;

struct LayerRecursion {
  int depth = 1;           // number of recursion steps applied to the base
  double sigma_w2 = 1.0;   // weight variance scale
  double sigma_b2 = 0.0;   // bias variance
  LayerActivation activation = ReluActivation{};
};

// Wide-network covariance recursion: starting from a PSD base Gram G0,
// G_l(x,y) = sigma_b2 + sigma_w2 * E[act(U) act(V)] with (U,V) centered
// Gaussian with covariance from G_{l-1}. Each layer is validated PSD;
// eigenvalues in [-clip, 0) are clipped to 0 (logged to stderr), anything
// lower raises KernelRecursionError. For Monte-Carlo activations the error
// threshold widens with the estimator's standard error. When se_out is given
// it receives the per-entry standard error of the last layer (zero for
// closed forms).
Eigen::MatrixXd layer_kernel_gram(const Eigen::MatrixXd& base,
                                  const LayerRecursion& recursion,
                                  Eigen::MatrixXd* se_out = nullptr);

// Base Gram of the one-hot state encoding scaled per the first affine layer:
// sigma_b2 + sigma_w2 * #{i : x_i = y_i} / n.
Eigen::MatrixXd one_hot_base_gram(const FeatureSpace& space, double sigma_w2,
                                  double sigma_b2);

// Recipe form: one-hot base Gram, then `recursion.depth` layers; wraps the
// result as a kernel operator on the basis' space and attempts spectrum
// extraction (succeeds e.g. on uniform measures, where the Gram depends only
// on the Hamming distance).
KernelOperator layer_kernel_operator(std::shared_ptr<const TensorBasis> basis,
                                     const LayerRecursion& recursion);

// --- Gaussian Wasserstein-2 ---------------------------------------------------

// W2 distance between centered Gaussians with covariances a and b (Bures):
// W2^2 = tr(a) + tr(b) - 2 tr((a^{1/2} b a^{1/2})^{1/2}). Inputs must be
// symmetric PSD (ParameterError); square roots use symmetric
// eigendecomposition with eigenvalues in [-1e-10, 0) clipped to 0.
double gaussian_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Conjugates a value-space covariance by diag(sqrt(mass)) so Euclidean
// geometry on the result equals L2(mu) geometry on the original.
Eigen::MatrixXd fold_measure(const Eigen::MatrixXd& k, const ProductMeasure& mu);

// --- Monte-Carlo experiment helpers ----------------------------------------

struct MonteCarloStats {
  double mean = 0.0;
  double standard_error = 0.0;
  long samples = 0;
};

// Mean of ||(I - P_keep) H||^2 over `samples` draws H ~ N(0, K), sampled in
// value space via the matrix factor (no spectrum needed). Independent of the
// trace identity it is used to check.
MonteCarloStats mc_residual_energy(const KernelOperator& op,
                                   const std::set<MultiIndex>& keep,
                                   long samples, std::uint64_t seed);

struct GapExperiment {
  MonteCarloStats gap;       // mean |phi_i(h) - phi_i(h_keep)|
  double violation_rate = 0.0;  // fraction of draws with gap > threshold
};

// KL-samples a basis-diagonal operator and measures the attribution gap for
// one feature; `threshold` (if > 0) also yields an exceedance rate.
GapExperiment mc_shap_gap(const KernelOperator& op,
                          const std::set<MultiIndex>& keep, int feature,
                          std::span<const int> x, long samples,
                          std::uint64_t seed, double threshold = 0.0);

// --- finite-width ensembles --------------------------------------------------

// Dense value tables of `count` random ReLU networks on the one-hot encoding:
// `hidden_layers` hidden layers of equal `width`, linear readout, weight
// variance sigma_w2 / fan-in, bias variance sigma_b2. The width -> infinity
// covariance is layer_kernel_operator with depth = hidden_layers.
std::vector<std::vector<double>> finite_width_tables(
    const FeatureSpace& space, int width, int hidden_layers, double sigma_w2,
    double sigma_b2, long count, std::uint64_t seed);

// Plug-in Gaussian-coupling distance: W2 between the zero-mean Gaussian with
// the ensemble's uncentered second moment and the limit operator, both folded
// into L2(mu) coordinates.
double estimate_epsilon_n(const std::vector<std::vector<double>>& tables,
                          const KernelOperator& limit);

}  // namespace fshap
