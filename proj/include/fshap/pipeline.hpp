#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fshap/shap.hpp"
#include "fshap/spectral_model.hpp"

namespace fshap::pipeline {

// ---------------------------------------------------------------------------
// Binning: raw CSV columns -> discrete states.
// ---------------------------------------------------------------------------

enum class BinKind { numeric, categorical };

enum class RejectReason {
  missing_value,     // empty / NA-style cell
  unparseable,       // numeric column, cell is not a number
  below_domain,      // numeric value under the lowest edge
  above_domain,      // numeric value over the highest edge
  unknown_category,  // categorical label not in the declared list
};

const char* to_string(RejectReason reason);

struct BinOutcome {
  int state = -1;
  std::optional<RejectReason> rejected;
};

// One column's discretization rule. Numeric rules carry m+1 strictly
// increasing edges defining bins [e_j, e_{j+1}), with the last bin closed at
// the top so the declared domain endpoint is accepted. Categorical rules map
// a label to its position in `categories`.
struct FeatureBinning {
  std::string column;
  BinKind kind = BinKind::numeric;
  std::vector<double> edges;            // numeric only
  std::vector<std::string> categories;  // categorical only

  int cardinality() const;
  BinOutcome bin(const std::string& raw_cell) const;
  // A raw string that bins back to `state` (bin midpoint / category label);
  // used to check that re-binning is idempotent.
  std::string representative(int state) const;
};

struct BinningScheme {
  std::vector<FeatureBinning> features;

  FeatureSpace space() const;
  std::vector<std::string> feature_names() const;
  int feature_index(const std::string& column) const;  // -1 when absent

  // The clinical scheme used throughout: age in eight life-stage ranges
  // starting at 2 years, glucose in eight diagnostic bands, BMI in eight
  // category ranges, binary flags and categorical labels passed through.
  static BinningScheme stroke_defaults();

  static BinningScheme load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

struct RowRejection {
  std::size_t row = 0;  // 0-based data row (header excluded)
  std::string column;
  RejectReason reason = RejectReason::missing_value;
  std::string value;
};

struct BinnedDataset {
  FeatureSpace space;
  std::vector<std::vector<int>> rows;      // accepted rows as state vectors
  std::vector<std::size_t> source_rows;    // original data-row index per row
  std::vector<RowRejection> rejections;    // first failing column per row
};

// Bins a raw table (first row = header). Every scheme column must be present
// (SchemaError). Each data row either maps to exactly one state vector or
// contributes one rejection record.
BinnedDataset bin_rows(const std::vector<std::vector<std::string>>& table,
                       const BinningScheme& scheme);

// Marginal frequencies of the accepted rows with Laplace smoothing `alpha`
// (alpha > 0 keeps every state strictly positive as the measure requires).
ProductMeasure empirical_measure(const FeatureSpace& space,
                                 const std::vector<std::vector<int>>& rows,
                                 double alpha = 1.0);

// ---------------------------------------------------------------------------
// Targets: probabilities -> logits, or MLP forward pass.
// ---------------------------------------------------------------------------

inline constexpr double kLogitEpsilon = 1e-7;

// log(p / (1-p)) with p clamped into [eps, 1-eps]; *clamped reports whether
// clamping fired. Non-finite p raises NumericError.
double logit(double p, bool* clamped = nullptr);
double sigmoid(double t);

std::vector<double> logit_column(std::span<const double> probs,
                                 std::size_t* clamp_count = nullptr);

// Feed-forward net evaluated on encoded discrete states. The two output
// scores feed a softmax head, so the log-odds equal score_1 - score_0 exactly.
struct MLPLayer {
  Eigen::MatrixXd weight;  // rows = outputs, cols = inputs
  Eigen::VectorXd bias;
  std::string activation;  // "relu" | "tanh" | "linear"
};

class MLP {
 public:
  MLP(std::vector<int> cardinalities, std::string encoding,
      std::vector<MLPLayer> layers);

  // JSON: {"format":"fshap-mlp","version":1,"encoding":"one_hot"|"ordinal",
  //        "cardinalities":[...],
  //        "layers":[{"weight":[[...],...],"bias":[...],"activation":"relu"}]}
  static MLP load_json(const std::string& path);

  const std::vector<int>& cardinalities() const { return cardinalities_; }
  const std::string& encoding() const { return encoding_; }
  std::size_t input_dim() const;

  Eigen::VectorXd encode(std::span<const int> state) const;
  Eigen::VectorXd scores(std::span<const int> state) const;  // two entries
  double logit(std::span<const int> state) const;            // s1 - s0

  Predictor predictor() const;

 private:
  std::vector<int> cardinalities_;
  std::string encoding_;
  std::vector<MLPLayer> layers_;
};

// ---------------------------------------------------------------------------
// Empirical atom selection (three stages) and coefficient fitting.
// ---------------------------------------------------------------------------

struct SelectionConfig {
  int k1 = 300;              // univariate budget
  int k2 = 4000;             // pair budget
  int k3 = 2000;             // triple budget
  int per_feature_top = 5;   // univariate modes carried into stages 2/3
  int d_max = 3;             // maximum interaction order
};

struct ScoredAtom {
  MultiIndex k;
  double correlation = 0.0;  // signed Pearson r against the targets
};

struct AtomSelection {
  SelectionConfig config;
  std::vector<ScoredAtom> univariate;  // stage outputs in rank order
  std::vector<ScoredAtom> pairs;
  std::vector<ScoredAtom> triples;
  bool degenerate_target = false;      // constant target: lexicographic fallback

  std::vector<MultiIndex> atoms() const;  // all stages, rank order
  std::size_t size() const;
};

// Ranks candidate atoms by |Pearson correlation| between the atom column
// Psi_k(rows) and the targets. Stage 1 scores every univariate mode; stage 2
// crosses each feature's top `per_feature_top` modes pairwise; stage 3
// extends kept pairs with a third feature's top modes. Ties break toward the
// lexicographically smaller index. Zero-variance columns are excluded; a
// constant target falls back to lexicographic order with a logged warning.
AtomSelection select_atoms(const TensorBasis& basis,
                           const std::vector<std::vector<int>>& rows,
                           std::span<const double> targets,
                           const SelectionConfig& config = {});

// Ridge least squares of targets on the selected atom columns plus the
// constant atom. Optional per-row weights. Singular normal equations (even
// with the ridge) raise FitError; more atoms than rows logs a warning.
SparseFourierModel fit_coefficients(
    std::shared_ptr<const TensorBasis> basis,
    const std::vector<MultiIndex>& atoms,
    const std::vector<std::vector<int>>& rows, std::span<const double> targets,
    double ridge_lambda = 1e-6, std::span<const double> row_weights = {});

// ---------------------------------------------------------------------------
// Per-bin attribution report.
// ---------------------------------------------------------------------------

struct PerBinConfig {
  int split_feature = 0;          // report is stratified by this feature
  std::size_t kernel_budget = 512;
  std::uint64_t seed = 0;         // kernel seed for row r is seed + r
  int threads = 0;                // 0 = library default
};

struct BinReportEntry {
  int feature = 0;
  double fourier = 0.0;  // mean |phi| over the bin's rows
  double kernel = 0.0;
  int rank_fourier = 0;  // 1 = largest, ties toward lower feature index
  int rank_kernel = 0;
  double delta = 0.0;    // fourier - kernel
};

struct BinReport {
  int bin = 0;
  std::size_t rows = 0;  // 0 flags an empty bin
  std::vector<BinReportEntry> entries;  // split feature excluded
};

// Mean absolute attribution per feature within each bin of the split
// feature, under both the closed-form method and the kernel regression
// estimator (run against the same model as a black box).
std::vector<BinReport> per_bin_report(
    const SparseFourierModel& model,
    const std::vector<std::vector<int>>& rows, const PerBinConfig& config);

// Columns: bin,rows,feature,fourier_shap,kernel_shap,rank_fourier,
// rank_kernel,delta. `names` may be empty (features print as f<i>).
void write_per_bin_csv(std::ostream& out,
                       const std::vector<BinReport>& reports,
                       const std::vector<std::string>& names = {});

// ---------------------------------------------------------------------------
// Timing / peak-allocation benchmark.
// ---------------------------------------------------------------------------

struct BenchmarkConfig {
  int reps = 10;    // timed repetitions (median reported)
  int warmup = 3;   // untimed repetitions run first
  std::size_t kernel_budget = 512;
  std::uint64_t seed = 0;
  bool run_kernel = true;
};

struct MethodBench {
  std::string method;
  std::size_t instances = 0;
  double median_seconds = 0.0;        // one repetition = all instances
  double per_instance_seconds = 0.0;
  std::size_t peak_mem_estimate = 0;  // bytes; see mem_source
  std::string mem_source;             // "alloc_tracker" | "rss_delta"
};

struct BenchmarkReport {
  std::vector<MethodBench> methods;
  double speedup = 0.0;  // kernel median / fourier median (0 if kernel off)
};

// Runs each method over all instances `reps` times after `warmup` discarded
// repetitions; measured sections are single-threaded.
BenchmarkReport run_benchmark(const SparseFourierModel& model,
                              const std::vector<std::vector<int>>& instances,
                              const BenchmarkConfig& config);

// Columns: method,instances,reps,median_seconds,per_instance_seconds,
// peak_mem_estimate_bytes,mem_source,speedup_vs_kernel.
void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report,
                         int reps);

}  // namespace fshap::pipeline
