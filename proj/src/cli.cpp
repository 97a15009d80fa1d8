#include "fshap/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fshap/csv.hpp"
#include "fshap/errors.hpp"
#include "fshap/format.hpp"
#include "fshap/gp.hpp"
#include "fshap/hash.hpp"
#include "fshap/pipeline.hpp"
#include "fshap/selector.hpp"
#include "fshap/shap.hpp"
#include "fshap/version.hpp"

namespace fshap::cli {
namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct RunContext {
  std::string subcommand;
  std::vector<std::string> args;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  std::string manifest_path;
};

void finish_manifest(const RunContext& ctx) {
  if (ctx.manifest_path.empty()) return;
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - ctx.start)
                          .count();
  std::string joined;
  for (const std::string& a : ctx.args) {
    joined += a;
    joined.push_back('\0');
  }
  std::string out = "{\n";
  out += "  \"format\": \"fshap-manifest\",\n";
  out += "  \"library_version\": \"" + std::string(kVersion) + "\",\n";
  out += "  \"subcommand\": \"" + ctx.subcommand + "\",\n";
  out += "  \"config_hash\": \"" + fnv1a64_hex(joined) + "\",\n";
  out += "  \"wall_seconds\": " + format_g17(wall) + ",\n";
  out += "  \"outputs\": [";
  for (std::size_t i = 0; i < ctx.outputs.size(); ++i) {
    if (i > 0) out += ", ";
    out += "\"" + ctx.outputs[i] + "\"";
  }
  out += "]\n}\n";
  std::ofstream file(ctx.manifest_path);
  if (!file) throw DataError("cannot write manifest: " + ctx.manifest_path);
  file << out;
}

std::ofstream open_output(RunContext& ctx, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write output file: " + path);
  ctx.outputs.push_back(path);
  return out;
}

std::vector<int> parse_state_text(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const std::size_t b = part.find_first_not_of(" \t");
    const std::size_t e = part.find_last_not_of(" \t");
    if (b == std::string::npos)
      throw ParameterError("instance: empty component in '" + text + "'");
    part = part.substr(b, e - b + 1);
    std::size_t pos = 0;
    int value = 0;
    try {
      value = std::stoi(part, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != part.size())
      throw ParameterError("instance: cannot parse '" + part +
                           "' as an integer");
    out.push_back(value);
  }
  if (out.empty()) throw ParameterError("instance: empty state list");
  return out;
}

std::vector<std::vector<int>> load_instances_csv(const std::string& path,
                                                 const FeatureSpace& space) {
  const auto table = csv::read_file(path);
  if (table.empty()) throw DataError("instances file is empty: " + path);
  std::vector<std::vector<int>> out;
  out.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::vector<int> state;
    state.reserve(table[r].size());
    for (const std::string& cell : table[r]) {
      std::size_t pos = 0;
      int value = 0;
      try {
        value = std::stoi(cell, &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != cell.size())
        throw DataError("instances file '" + path + "' row " +
                        std::to_string(r) + ": cannot parse '" + cell + "'");
      state.push_back(value);
    }
    try {
      space.validate_state(state);
    } catch (const Error& e) {
      throw DataError("instances file '" + path + "' row " +
                      std::to_string(r) + ": " + e.what());
    }
    out.push_back(std::move(state));
  }
  return out;
}

nlohmann::json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw DataError(std::string("cannot open ") + what + " file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string(what) + " '" + path + "': " + e.what());
  }
  return doc;
}

// Dense table file: {"cardinalities":[...], "values":[...]} in mixed-radix
// order (feature 0 slowest).
DensePredictor load_dense_table(const std::string& path) {
  const nlohmann::json doc = load_json_file(path, "dense table");
  if (!doc.is_object())
    throw SchemaError("dense table '" + path + "': expected a JSON object");
  for (const auto& item : doc.items()) {
    if (item.key() != "cardinalities" && item.key() != "values")
      throw SchemaError("dense table '" + path + "': unknown key '" +
                        item.key() + "'");
  }
  try {
    auto cards = doc.at("cardinalities").get<std::vector<int>>();
    auto values = doc.at("values").get<std::vector<double>>();
    return DensePredictor(FeatureSpace(std::move(cards)), std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("dense table '" + path + "': " + e.what());
  }
}

// Kernel spec file. Common keys: cardinalities, optional measures (uniform
// when absent), kind. Kind-specific payload:
//   "spectrum": [{"k":[...],"s":value}, ...]  (unlisted indices get 0)
//   "matrix":   [[...], ...]                  (value-space covariance)
//   "nngp":     depth, sigma_w2, sigma_b2, activation ("relu"|"erf")
KernelOperator load_kernel_spec(const std::string& path) {
  const nlohmann::json doc = load_json_file(path, "kernel spec");
  if (!doc.is_object())
    throw SchemaError("kernel spec '" + path + "': expected a JSON object");
  static const std::set<std::string> known = {
      "cardinalities", "measures", "kind",      "spectrum",
      "matrix",        "depth",    "sigma_w2",  "sigma_b2",
      "activation"};
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key()))
      throw SchemaError("kernel spec '" + path + "': unknown key '" +
                        item.key() + "'");
  }
  try {
    FeatureSpace space(doc.at("cardinalities").get<std::vector<int>>());
    ProductMeasure measure =
        doc.contains("measures")
            ? ProductMeasure(space, doc.at("measures")
                                        .get<std::vector<std::vector<double>>>())
            : ProductMeasure::uniform(space);
    auto basis = make_tensor_basis(std::move(measure));
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "spectrum") {
      std::vector<double> spectrum(space.total_states(), 0.0);
      for (const auto& entry : doc.at("spectrum")) {
        for (const auto& item : entry.items()) {
          if (item.key() != "k" && item.key() != "s")
            throw SchemaError("kernel spec '" + path +
                              "': unknown spectrum key '" + item.key() + "'");
        }
        MultiIndex k{entry.at("k").get<std::vector<int>>()};
        validate_multi_index(space, k);
        spectrum[space.state_index(k.digits)] =
            entry.at("s").get<double>();
      }
      return KernelOperator::from_spectrum(std::move(basis),
                                           std::move(spectrum));
    }
    if (kind == "matrix") {
      const auto rows = doc.at("matrix").get<std::vector<std::vector<double>>>();
      const auto n = static_cast<Eigen::Index>(space.total_states());
      if (static_cast<Eigen::Index>(rows.size()) != n)
        throw SchemaError("kernel spec '" + path + "': matrix must be " +
                          std::to_string(n) + "x" + std::to_string(n));
      Eigen::MatrixXd m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
          throw SchemaError("kernel spec '" + path + "': ragged matrix");
        for (Eigen::Index c = 0; c < n; ++c)
          m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      KernelOperator op(std::move(basis), std::move(m));
      op.try_diagonalize();
      return op;
    }
    if (kind == "nngp") {
      LayerRecursion recursion;
      recursion.depth = doc.at("depth").get<int>();
      recursion.sigma_w2 = doc.at("sigma_w2").get<double>();
      recursion.sigma_b2 = doc.at("sigma_b2").get<double>();
      const std::string act = doc.at("activation").get<std::string>();
      if (act == "relu")
        recursion.activation = ReluActivation{};
      else if (act == "erf")
        recursion.activation = ErfActivation{};
      else
        throw SchemaError("kernel spec '" + path + "': unknown activation '" +
                          act + "'");
      return layer_kernel_operator(std::move(basis), recursion);
    }
    throw SchemaError("kernel spec '" + path + "': unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("kernel spec '" + path + "': " + e.what());
  }
}

// Keep set over the FULL index set of a kernel's space. abs>= / top= rank by
// eigenvalue, so they need a basis-diagonal operator.
std::set<MultiIndex> spectrum_keep_set(const KernelOperator& op,
                                       const Selector& selector) {
  if ((selector.min_abs || selector.top) && !op.diagonal_in_basis())
    throw ParameterError(
        "selector clauses abs>= and top= need a basis-diagonal kernel");
  const FeatureSpace& space = op.space();
  std::map<MultiIndex, double> coefficients;
  for_each_state(space, [&](std::span<const int> digits) {
    MultiIndex k{std::vector<int>(digits.begin(), digits.end())};
    const double value = op.diagonal_in_basis()
                             ? op.spectrum()[space.state_index(digits)]
                             : 0.0;
    coefficients.emplace(std::move(k), value);
  });
  return selector.select(coefficients);
}

void write_attribution_rows(std::ostream& out,
                            const std::vector<Attribution>& list) {
  out << "instance_id,feature,phi,base_value,method\n";
  for (std::size_t id = 0; id < list.size(); ++id) {
    const Attribution& a = list[id];
    for (std::size_t i = 0; i < a.phi.size(); ++i)
      out << id << ',' << i << ',' << format_g17(a.phi[i]) << ','
          << format_g17(a.base_value) << ',' << a.method << "\n";
  }
}

// Deterministic uniform in [0,1) from the raw engine (53 mantissa bits), so
// sampled artifacts do not depend on the standard library's distributions.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::vector<int>> sample_instances(const ProductMeasure& mu,
                                               std::size_t count,
                                               std::uint64_t seed) {
  const FeatureSpace& space = mu.space();
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<int> state(static_cast<std::size_t>(space.feature_count()));
    for (int i = 0; i < space.feature_count(); ++i) {
      const double u = next_unit(rng);
      double acc = 0.0;
      int pick = space.cardinality(i) - 1;
      for (int v = 0; v < space.cardinality(i); ++v) {
        acc += mu.mass(i, v);
        if (u < acc) {
          pick = v;
          break;
        }
      }
      state[static_cast<std::size_t>(i)] = pick;
    }
    out.push_back(std::move(state));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

struct BasisOptions {
  std::string measure;
  std::string out;
};

void run_basis(RunContext& ctx, const BasisOptions& opt) {
  const ProductMeasure measure = ProductMeasure::load_json(opt.measure);
  const TensorBasis basis(measure);
  auto out = open_output(ctx, opt.out);
  out << "feature,mode,state,value\n";
  const FeatureSpace& space = measure.space();
  for (int i = 0; i < space.feature_count(); ++i) {
    const CoordinateBasis& cb = basis.coordinate(i);
    for (int mode = 0; mode < cb.size(); ++mode)
      for (int state = 0; state < cb.size(); ++state)
        out << i << ',' << mode << ',' << state << ','
            << format_g17(cb.value(mode, state)) << "\n";
  }
}

struct TransformOptions {
  std::string table;
  std::string measure;
  bool uniform = false;
  std::string select;
  std::string out;
};

void run_transform(RunContext& ctx, const TransformOptions& opt) {
  if (opt.measure.empty() == !opt.uniform)
    throw ParameterError("transform: give exactly one of --measure / --uniform");
  DensePredictor dense = load_dense_table(opt.table);
  ProductMeasure measure = opt.uniform
                               ? ProductMeasure::uniform(dense.space)
                               : ProductMeasure::load_json(opt.measure);
  if (!(measure.space() == dense.space))
    throw DataError("transform: table and measure cardinalities differ");
  std::optional<Selector> selector;
  if (!opt.select.empty()) selector = Selector::parse(opt.select);

  auto basis = make_tensor_basis(std::move(measure));
  SparseFourierModel model = forward_transform(dense, basis);
  if (selector) {
    Truncation truncated = truncate(model, selector->select(model.entries()));
    std::fprintf(stderr,
                 "[transform] kept %zu of %zu coefficients, residual energy "
                 "%.6g\n",
                 truncated.model.size(), model.size(),
                 truncated.residual_energy);
    model = std::move(truncated.model);
  }
  save_model_jsonl(model, opt.out);
  ctx.outputs.push_back(opt.out);
}

struct ShapOptions {
  std::string model;
  std::string method = "fourier";
  std::string instance;
  std::string instances;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

void run_shap(RunContext& ctx, const ShapOptions& opt) {
  if (opt.method != "fourier" && opt.method != "brute" &&
      opt.method != "kernel")
    throw ParameterError("shap: --method must be fourier, brute, or kernel");
  const SparseFourierModel model = load_model_jsonl(opt.model);
  const FeatureSpace& space = model.space();

  if (opt.instance.empty() == opt.instances.empty())
    throw ParameterError("shap: give exactly one of --instance / --instances");
  std::vector<std::vector<int>> instances;
  if (!opt.instance.empty()) {
    std::vector<int> x = parse_state_text(opt.instance);
    space.validate_state(x);
    instances.push_back(std::move(x));
  } else {
    instances = load_instances_csv(opt.instances, space);
  }

  if (opt.method == "kernel") {
    if (opt.budget == 0)
      throw ParameterError("shap: --budget is required for the kernel method");
    if (!opt.seed_given)
      throw ParameterError("shap: --seed is required for the kernel method");
  }

  std::vector<Attribution> results;
  results.reserve(instances.size());
  const Predictor h = make_predictor(model);
  for (std::size_t r = 0; r < instances.size(); ++r) {
    const auto& x = instances[r];
    Attribution a;
    if (opt.method == "fourier") {
      a = fourier_shap(model, x);
    } else if (opt.method == "brute") {
      a = brute_force_shap(h, x, model.measure());
    } else {
      a = kernel_shap(h, x, model.measure(), opt.budget,
                      opt.seed + static_cast<std::uint64_t>(r));
    }
    if (opt.method != "kernel") {
      const double drift = std::fabs(a.total() - model.evaluate(x));
      if (drift > 1e-8)
        throw NumericError("shap: efficiency drift " + format_g17(drift) +
                           " at instance " + std::to_string(r));
    }
    results.push_back(std::move(a));
  }
  auto out = open_output(ctx, opt.out);
  write_attribution_rows(out, results);
}

struct BoundsOptions {
  std::string model;
  std::string kernel;
  std::string select;
  std::string instance;
  int feature = -1;
  double delta = 0.05;
  long mc_samples = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

void run_bounds(RunContext& ctx, const BoundsOptions& opt) {
  if (opt.model.empty() == opt.kernel.empty())
    throw ParameterError("bounds: give exactly one of --model / --kernel");
  const Selector selector = Selector::parse(opt.select);
  std::vector<std::string> rows;

  if (!opt.model.empty()) {
    // Deterministic certificate for truncating a known expansion.
    const SparseFourierModel model = load_model_jsonl(opt.model);
    std::vector<int> x = parse_state_text(opt.instance);
    model.space().validate_state(x);
    if (opt.feature >= model.space().feature_count())
      throw ParameterError("bounds: feature out of range");
    const std::set<MultiIndex> keep = selector.select(model.entries());
    std::vector<int> features;
    if (opt.feature >= 0)
      features.push_back(opt.feature);
    else
      for (int i = 0; i < model.space().feature_count(); ++i)
        features.push_back(i);
    for (int f : features) {
      const double value = truncation_bound(model, keep, f, x);
      rows.push_back(std::to_string(f) + ",truncation,," + format_g17(value) +
                     ",,");
    }
  } else {
    // Gaussian-process certificates from a kernel spec.
    if (!(opt.delta > 0.0 && opt.delta < 1.0))
      throw ParameterError("bounds: --delta must lie in (0,1)");
    if (opt.mc_samples > 0 && !opt.seed_given)
      throw ParameterError("bounds: --seed is required with --mc-samples");
    const KernelOperator op = load_kernel_spec(opt.kernel);
    std::vector<int> x = parse_state_text(opt.instance);
    op.space().validate_state(x);
    if (opt.feature >= op.space().feature_count())
      throw ParameterError("bounds: feature out of range");
    const std::set<MultiIndex> keep = spectrum_keep_set(op, selector);
    const TailStatistics tail = TailStatistics::from_spectrum(op, keep);
    tail.validate();
    std::vector<int> features;
    if (opt.feature >= 0)
      features.push_back(opt.feature);
    else
      for (int i = 0; i < op.space().feature_count(); ++i)
        features.push_back(i);
    for (int f : features) {
      const double wsq = tail_weight_sq_sum(op.basis(), keep, f, x);
      const double expected = expected_shap_bound(op, keep, f, x);
      const double hp = high_probability_bound(tail, wsq, opt.delta);
      std::string mc_mean;
      std::string violation;
      if (opt.mc_samples > 0) {
        const GapExperiment exp =
            mc_shap_gap(op, keep, f, x, opt.mc_samples,
                        opt.seed + static_cast<std::uint64_t>(f), hp);
        mc_mean = format_g17(exp.gap.mean);
        violation = format_g17(exp.violation_rate);
      }
      rows.push_back(std::to_string(f) + ",expected_gap,," +
                     format_g17(expected) + "," + mc_mean + ",");
      rows.push_back(std::to_string(f) + ",high_probability," +
                     format_g17(opt.delta) + "," + format_g17(hp) + ",," +
                     violation);
    }
  }

  auto out = open_output(ctx, opt.out);
  out << "feature,bound_type,delta,value,mc_estimate,violation_rate\n";
  for (const std::string& row : rows) out << row << "\n";
}

struct GpOptions {
  std::string task;
  std::string kernel;
  std::string select;
  std::string instance;
  int feature = -1;
  long samples = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string cards;
  int width = 0;
  int hidden = 1;
  double sigma_w2 = 1.0;
  double sigma_b2 = 0.0;
  long count = 0;
  std::string out;
};

void run_gp(RunContext& ctx, const GpOptions& opt) {
  if (opt.task == "sample") {
    if (!opt.seed_given) throw ParameterError("gp sample: --seed is required");
    const KernelOperator op = load_kernel_spec(opt.kernel);
    const GPSample sample = kl_sample(op, opt.seed);
    auto out = open_output(ctx, opt.out);
    out << "{\"format\":\"fshap-gp-sample\",\"seed\":" << sample.seed
        << ",\"values\":[";
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
      if (i > 0) out << ',';
      out << format_g17(sample.values[i]);
    }
    out << "]}\n";
    return;
  }
  if (opt.task == "trace") {
    const KernelOperator op = load_kernel_spec(opt.kernel);
    const Selector selector = Selector::parse(opt.select);
    const std::set<MultiIndex> keep = spectrum_keep_set(op, selector);
    const double trace = expected_residual_trace(op, keep);
    std::string mc_mean, mc_se, samples;
    if (opt.samples > 0) {
      if (!opt.seed_given)
        throw ParameterError("gp trace: --seed is required with --samples");
      const MonteCarloStats stats =
          mc_residual_energy(op, keep, opt.samples, opt.seed);
      mc_mean = format_g17(stats.mean);
      mc_se = format_g17(stats.standard_error);
      samples = std::to_string(stats.samples);
    }
    auto out = open_output(ctx, opt.out);
    out << "quantity,value,mc_estimate,mc_se,samples\n";
    out << "residual_trace," << format_g17(trace) << ',' << mc_mean << ','
        << mc_se << ',' << samples << "\n";
    return;
  }
  if (opt.task == "gap") {
    if (!opt.seed_given) throw ParameterError("gp gap: --seed is required");
    if (opt.samples <= 0)
      throw ParameterError("gp gap: --samples must be positive");
    const KernelOperator op = load_kernel_spec(opt.kernel);
    const Selector selector = Selector::parse(opt.select);
    std::vector<int> x = parse_state_text(opt.instance);
    op.space().validate_state(x);
    if (opt.feature < 0 || opt.feature >= op.space().feature_count())
      throw ParameterError("gp gap: --feature is required and must be in range");
    const std::set<MultiIndex> keep = spectrum_keep_set(op, selector);
    const GapExperiment exp = mc_shap_gap(op, keep, opt.feature, x,
                                          opt.samples, opt.seed, opt.threshold);
    auto out = open_output(ctx, opt.out);
    out << "feature,samples,mean_gap,standard_error,threshold,violation_rate\n";
    out << opt.feature << ',' << exp.gap.samples << ','
        << format_g17(exp.gap.mean) << ','
        << format_g17(exp.gap.standard_error) << ','
        << format_g17(opt.threshold) << ',' << format_g17(exp.violation_rate)
        << "\n";
    return;
  }
  if (opt.task == "finite-width") {
    if (!opt.seed_given)
      throw ParameterError("gp finite-width: --seed is required");
    if (opt.cards.empty())
      throw ParameterError("gp finite-width: --cards is required");
    if (opt.width < 1 || opt.count < 1)
      throw ParameterError("gp finite-width: --width and --count must be >= 1");
    const FeatureSpace space(parse_state_text(opt.cards));
    auto basis = make_tensor_basis(ProductMeasure::uniform(space));
    LayerRecursion recursion;
    recursion.depth = opt.hidden;
    recursion.sigma_w2 = opt.sigma_w2;
    recursion.sigma_b2 = opt.sigma_b2;
    const KernelOperator limit = layer_kernel_operator(basis, recursion);
    const auto tables = finite_width_tables(space, opt.width, opt.hidden,
                                            opt.sigma_w2, opt.sigma_b2,
                                            opt.count, opt.seed);
    const double eps = estimate_epsilon_n(tables, limit);
    std::string bound, sigma1;
    if (!opt.select.empty()) {
      if (opt.instance.empty() || opt.feature < 0)
        throw ParameterError(
            "gp finite-width: --select needs --instance and --feature");
      const Selector selector = Selector::parse(opt.select);
      std::vector<int> x = parse_state_text(opt.instance);
      space.validate_state(x);
      if (opt.feature >= space.feature_count())
        throw ParameterError("gp finite-width: feature out of range");
      const std::set<MultiIndex> keep = spectrum_keep_set(limit, selector);
      const TailStatistics tail = TailStatistics::from_spectrum(limit, keep);
      const double wsq = tail_weight_sq_sum(limit.basis(), keep, opt.feature, x);
      sigma1 = format_g17(tail.sigma1);
      bound = format_g17(finite_width_bound(wsq, tail.sigma1, eps));
    }
    auto out = open_output(ctx, opt.out);
    out << "width,hidden_layers,count,eps_n,sigma1_tail,bound\n";
    out << opt.width << ',' << opt.hidden << ',' << opt.count << ','
        << format_g17(eps) << ',' << sigma1 << ',' << bound << "\n";
    return;
  }
  throw ParameterError("gp: --task must be sample, trace, gap, or finite-width");
}

struct PipelineOptions {
  std::string data;
  std::string scheme;
  bool stroke_defaults = false;
  std::string emit_scheme;
  std::string prob_col;
  std::string mlp;
  std::string out_model;
  std::string report;
  std::string split = "age";
  std::string rejects;
  pipeline::SelectionConfig selection;
  double ridge = 1e-6;
  double laplace = 1.0;
  std::size_t kernel_budget = 512;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

void run_pipeline(RunContext& ctx, const PipelineOptions& opt) {
  if (!opt.scheme.empty() && opt.stroke_defaults)
    throw ParameterError("pipeline: --scheme conflicts with --stroke-defaults");
  const pipeline::BinningScheme scheme =
      opt.scheme.empty() ? pipeline::BinningScheme::stroke_defaults()
                         : pipeline::BinningScheme::load_json(opt.scheme);

  if (!opt.emit_scheme.empty()) {
    scheme.save_json(opt.emit_scheme);
    ctx.outputs.push_back(opt.emit_scheme);
    if (opt.data.empty()) return;  // scheme dump only
  }
  if (opt.data.empty()) throw ParameterError("pipeline: --data is required");
  if (opt.out_model.empty())
    throw ParameterError("pipeline: --out-model is required");
  if (opt.prob_col.empty() == opt.mlp.empty())
    throw ParameterError("pipeline: give exactly one of --prob-col / --mlp");
  if (!opt.report.empty() && !opt.seed_given)
    throw ParameterError("pipeline: --seed is required with --report");

  const auto table = csv::read_file(opt.data);
  if (table.empty()) throw DataError("pipeline: data file is empty");
  const pipeline::BinnedDataset dataset = pipeline::bin_rows(table, scheme);
  if (dataset.rows.empty())
    throw DataError("pipeline: no rows survived binning");
  std::fprintf(stderr, "[pipeline] accepted %zu rows, rejected %zu\n",
               dataset.rows.size(), dataset.rejections.size());

  // Resolve the report's split feature before doing heavy work.
  int split_feature = -1;
  if (!opt.report.empty()) {
    split_feature = scheme.feature_index(opt.split);
    if (split_feature < 0) {
      try {
        split_feature = std::stoi(opt.split);
      } catch (const std::exception&) {
        split_feature = -1;
      }
    }
    if (split_feature < 0 ||
        split_feature >= static_cast<int>(scheme.features.size()))
      throw ParameterError("pipeline: unknown split feature '" + opt.split + "'");
  }

  // Targets on the logit scale.
  std::vector<double> targets;
  if (!opt.prob_col.empty()) {
    const auto& header = table.front();
    std::size_t col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == opt.prob_col) col = c;
    if (col == header.size())
      throw SchemaError("pipeline: missing probability column '" +
                        opt.prob_col + "'");
    std::vector<double> probs;
    probs.reserve(dataset.rows.size());
    for (std::size_t src : dataset.source_rows) {
      const auto& cells = table[src + 1];
      if (col >= cells.size())
        throw DataError("pipeline: row " + std::to_string(src) +
                        " has no probability cell");
      double p = 0.0;
      try {
        p = parse_double(cells[col]);
      } catch (const NumericError&) {
        throw DataError("pipeline: row " + std::to_string(src) +
                        ": cannot parse probability '" + cells[col] + "'");
      }
      if (!(p >= 0.0 && p <= 1.0))
        throw DataError("pipeline: row " + std::to_string(src) +
                        ": probability " + cells[col] + " outside [0,1]");
      probs.push_back(p);
    }
    targets = pipeline::logit_column(probs);
  } else {
    const pipeline::MLP mlp = pipeline::MLP::load_json(opt.mlp);
    if (mlp.cardinalities() != dataset.space.cardinalities())
      throw SchemaError("pipeline: MLP cardinalities do not match the scheme");
    targets.reserve(dataset.rows.size());
    for (const auto& row : dataset.rows) targets.push_back(mlp.logit(row));
  }

  // Fit the sparse surrogate on the empirical marginals.
  const ProductMeasure measure =
      pipeline::empirical_measure(dataset.space, dataset.rows, opt.laplace);
  auto basis = make_tensor_basis(measure);
  const pipeline::AtomSelection selection =
      pipeline::select_atoms(*basis, dataset.rows, targets, opt.selection);
  std::fprintf(stderr,
               "[pipeline] selected %zu univariate + %zu pair + %zu triple "
               "atoms\n",
               selection.univariate.size(), selection.pairs.size(),
               selection.triples.size());
  const SparseFourierModel model = pipeline::fit_coefficients(
      basis, selection.atoms(), dataset.rows, targets, opt.ridge);

  std::vector<pipeline::BinReport> reports;
  if (!opt.report.empty()) {
    pipeline::PerBinConfig report_config;
    report_config.split_feature = split_feature;
    report_config.kernel_budget = opt.kernel_budget;
    report_config.seed = opt.seed;
    report_config.threads = opt.threads;
    reports = pipeline::per_bin_report(model, dataset.rows, report_config);
  }

  // All computation done; write artifacts.
  save_model_jsonl(model, opt.out_model);
  ctx.outputs.push_back(opt.out_model);
  if (!opt.report.empty()) {
    auto out = open_output(ctx, opt.report);
    pipeline::write_per_bin_csv(out, reports, scheme.feature_names());
  }
  if (!opt.rejects.empty()) {
    auto out = open_output(ctx, opt.rejects);
    out << "row,column,reason,value\n";
    for (const auto& r : dataset.rejections)
      out << r.row << ',' << csv::escape(r.column) << ','
          << pipeline::to_string(r.reason) << ',' << csv::escape(r.value)
          << "\n";
  }
}

struct BenchOptions {
  std::string model;
  std::string instances;
  std::size_t random_count = 0;
  int split_feature = -1;
  std::size_t kernel_budget = 512;
  int reps = 10;
  int warmup = 3;
  bool no_kernel = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

void run_bench(RunContext& ctx, const BenchOptions& opt) {
  if (opt.instances.empty() == (opt.random_count == 0))
    throw ParameterError("bench: give exactly one of --instances / --random");
  if (!opt.seed_given) throw ParameterError("bench: --seed is required");
  const SparseFourierModel model = load_model_jsonl(opt.model);
  const FeatureSpace& space = model.space();
  std::vector<std::vector<int>> instances =
      !opt.instances.empty()
          ? load_instances_csv(opt.instances, space)
          : sample_instances(model.measure(), opt.random_count, opt.seed);

  pipeline::BenchmarkConfig config;
  config.reps = opt.reps;
  config.warmup = opt.warmup;
  config.kernel_budget = opt.kernel_budget;
  config.seed = opt.seed;
  config.run_kernel = !opt.no_kernel;

  if (opt.split_feature < 0) {
    const pipeline::BenchmarkReport report =
        pipeline::run_benchmark(model, instances, config);
    auto out = open_output(ctx, opt.out);
    pipeline::write_benchmark_csv(out, report, config.reps);
    return;
  }

  if (opt.split_feature >= space.feature_count())
    throw ParameterError("bench: split feature out of range");
  std::vector<std::vector<std::vector<int>>> groups(
      static_cast<std::size_t>(space.cardinality(opt.split_feature)));
  for (auto& x : instances)
    groups[static_cast<std::size_t>(
               x[static_cast<std::size_t>(opt.split_feature)])]
        .push_back(x);

  auto out = open_output(ctx, opt.out);
  out << "bin,method,instances,reps,median_seconds,per_instance_seconds,"
         "peak_mem_estimate_bytes,mem_source,speedup_vs_kernel\n";
  for (std::size_t b = 0; b < groups.size(); ++b) {
    if (groups[b].empty()) continue;
    const pipeline::BenchmarkReport report =
        pipeline::run_benchmark(model, groups[b], config);
    double kernel_median = 0.0;
    for (const auto& m : report.methods)
      if (m.method == "kernel") kernel_median = m.median_seconds;
    for (const auto& m : report.methods) {
      const double speedup = (kernel_median > 0.0 && m.median_seconds > 0.0)
                                 ? kernel_median / m.median_seconds
                                 : 0.0;
      out << b << ',' << m.method << ',' << m.instances << ',' << config.reps
          << ',' << format_g17(m.median_seconds) << ','
          << format_g17(m.per_instance_seconds) << ',' << m.peak_mem_estimate
          << ',' << m.mem_source << ',' << format_g17(speedup) << "\n";
    }
  }
}

int guarded(RunContext& ctx, const std::function<void()>& body) {
  try {
    body();
    finish_manifest(ctx);
    return kExitOk;
  } catch (const ParameterError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DimensionError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return kExitConfigError;
  } catch (const SchemaError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return kExitDataError;
  } catch (const DataError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return kExitDataError;
  } catch (const MeasureSupportError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return kExitDataError;
  } catch (const Error& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return kExitNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spectral SHAP toolkit: orthonormal expansions, exact and "
               "regression attributions, certified error bounds"};
  app.name("fshap");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunContext ctx;
  ctx.args = args;

  BasisOptions basis_opt;
  auto* basis_cmd = app.add_subcommand(
      "basis", "Emit the per-feature orthonormal tables for a measure");
  basis_cmd->add_option("--measure", basis_opt.measure, "measure JSON")
      ->required();
  basis_cmd->add_option("--out", basis_opt.out, "output CSV")->required();
  basis_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  TransformOptions transform_opt;
  auto* transform_cmd = app.add_subcommand(
      "transform", "Expand a dense table into sparse coefficients");
  transform_cmd->add_option("--table", transform_opt.table, "dense table JSON")
      ->required();
  transform_cmd->add_option("--measure", transform_opt.measure, "measure JSON");
  transform_cmd->add_flag("--uniform", transform_opt.uniform,
                          "use the uniform measure");
  transform_cmd->add_option("--select", transform_opt.select,
                            "truncation selector, e.g. order<=2&top=50");
  transform_cmd->add_option("--out", transform_opt.out, "model JSONL")
      ->required();
  transform_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  ShapOptions shap_opt;
  auto* shap_cmd =
      app.add_subcommand("shap", "Attribute instances under a sparse model");
  shap_cmd->add_option("--model", shap_opt.model, "model JSONL")->required();
  shap_cmd->add_option("--method", shap_opt.method,
                       "fourier | brute | kernel");
  shap_cmd->add_option("--instance", shap_opt.instance,
                       "comma-separated state, e.g. 1,0,2");
  shap_cmd->add_option("--instances", shap_opt.instances,
                       "CSV of instances (one state per row)");
  shap_cmd->add_option("--budget", shap_opt.budget,
                       "kernel evaluation budget");
  auto* shap_seed =
      shap_cmd->add_option("--seed", shap_opt.seed, "kernel sampling seed");
  shap_cmd->add_option("--out", shap_opt.out, "attribution CSV")->required();
  shap_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  BoundsOptions bounds_opt;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Certified attribution-error bounds for a truncation");
  bounds_cmd->add_option("--model", bounds_opt.model,
                         "model JSONL (deterministic bound)");
  bounds_cmd->add_option("--kernel", bounds_opt.kernel,
                         "kernel spec JSON (GP bounds)");
  bounds_cmd->add_option("--select", bounds_opt.select, "kept-set selector")
      ->required();
  bounds_cmd->add_option("--instance", bounds_opt.instance, "explained state")
      ->required();
  bounds_cmd->add_option("--feature", bounds_opt.feature,
                         "feature index (default: all)");
  bounds_cmd->add_option("--delta", bounds_opt.delta,
                         "confidence parameter for the tail bound");
  bounds_cmd->add_option("--mc-samples", bounds_opt.mc_samples,
                         "verify bounds against this many GP draws");
  auto* bounds_seed =
      bounds_cmd->add_option("--seed", bounds_opt.seed, "MC seed");
  bounds_cmd->add_option("--out", bounds_opt.out, "bound report CSV")
      ->required();
  bounds_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  GpOptions gp_opt;
  auto* gp_cmd = app.add_subcommand(
      "gp", "Gaussian-process experiments (sample/trace/gap/finite-width)");
  gp_cmd->add_option("--task", gp_opt.task, "sample | trace | gap | finite-width")
      ->required();
  gp_cmd->add_option("--kernel", gp_opt.kernel, "kernel spec JSON");
  gp_cmd->add_option("--select", gp_opt.select, "kept-set selector");
  gp_cmd->add_option("--instance", gp_opt.instance, "explained state");
  gp_cmd->add_option("--feature", gp_opt.feature, "feature index");
  gp_cmd->add_option("--samples", gp_opt.samples, "Monte-Carlo draws");
  gp_cmd->add_option("--threshold", gp_opt.threshold,
                     "gap threshold for violation counting");
  auto* gp_seed = gp_cmd->add_option("--seed", gp_opt.seed, "RNG seed");
  gp_cmd->add_option("--cards", gp_opt.cards,
                     "cardinalities for finite-width, e.g. 4,3,2");
  gp_cmd->add_option("--width", gp_opt.width, "hidden width");
  gp_cmd->add_option("--hidden", gp_opt.hidden, "hidden layer count");
  gp_cmd->add_option("--sigma-w2", gp_opt.sigma_w2, "weight variance scale");
  gp_cmd->add_option("--sigma-b2", gp_opt.sigma_b2, "bias variance");
  gp_cmd->add_option("--count", gp_opt.count, "ensemble size");
  gp_cmd->add_option("--out", gp_opt.out, "output file")->required();
  gp_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  PipelineOptions pipeline_opt;
  auto* pipeline_cmd = app.add_subcommand(
      "pipeline", "CSV ingestion, binning, surrogate fit, per-bin report");
  pipeline_cmd->add_option("--data", pipeline_opt.data, "raw CSV with header");
  pipeline_cmd->add_option("--scheme", pipeline_opt.scheme,
                           "binning scheme JSON");
  pipeline_cmd->add_flag("--stroke-defaults", pipeline_opt.stroke_defaults,
                         "use the built-in clinical binning scheme");
  pipeline_cmd->add_option("--emit-scheme", pipeline_opt.emit_scheme,
                           "write the effective scheme JSON and continue");
  pipeline_cmd->add_option("--prob-col", pipeline_opt.prob_col,
                           "probability column to explain");
  pipeline_cmd->add_option("--mlp", pipeline_opt.mlp, "MLP weights JSON");
  pipeline_cmd->add_option("--out-model", pipeline_opt.out_model,
                           "fitted surrogate JSONL");
  pipeline_cmd->add_option("--report", pipeline_opt.report,
                           "per-bin attribution CSV");
  pipeline_cmd->add_option("--split", pipeline_opt.split,
                           "report split feature (name or index)");
  pipeline_cmd->add_option("--rejects", pipeline_opt.rejects,
                           "rejected-row CSV");
  pipeline_cmd->add_option("--k1", pipeline_opt.selection.k1,
                           "univariate budget");
  pipeline_cmd->add_option("--k2", pipeline_opt.selection.k2, "pair budget");
  pipeline_cmd->add_option("--k3", pipeline_opt.selection.k3, "triple budget");
  pipeline_cmd->add_option("--per-feature-top",
                           pipeline_opt.selection.per_feature_top,
                           "univariate modes fed to stages 2/3");
  pipeline_cmd->add_option("--dmax", pipeline_opt.selection.d_max,
                           "max interaction order");
  pipeline_cmd->add_option("--ridge", pipeline_opt.ridge, "ridge lambda");
  pipeline_cmd->add_option("--laplace", pipeline_opt.laplace,
                           "marginal smoothing pseudo-count");
  pipeline_cmd->add_option("--kernel-budget", pipeline_opt.kernel_budget,
                           "kernel budget for the report");
  auto* pipeline_seed =
      pipeline_cmd->add_option("--seed", pipeline_opt.seed, "kernel seed");
  pipeline_cmd->add_option("--threads", pipeline_opt.threads,
                           "worker threads (0 = default)");
  pipeline_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand(
      "bench", "Wall-time and peak-allocation comparison of the methods");
  bench_cmd->add_option("--model", bench_opt.model, "model JSONL")->required();
  bench_cmd->add_option("--instances", bench_opt.instances, "instance CSV");
  bench_cmd->add_option("--random", bench_opt.random_count,
                        "sample this many instances from the measure");
  bench_cmd->add_option("--split-feature", bench_opt.split_feature,
                        "report one row group per bin of this feature");
  bench_cmd->add_option("--kernel-budget", bench_opt.kernel_budget,
                        "kernel evaluation budget");
  bench_cmd->add_option("--reps", bench_opt.reps, "timed repetitions");
  bench_cmd->add_option("--warmup", bench_opt.warmup, "discarded repetitions");
  bench_cmd->add_flag("--no-kernel", bench_opt.no_kernel,
                      "skip the kernel baseline");
  auto* bench_seed = bench_cmd->add_option("--seed", bench_opt.seed,
                                           "sampling / kernel seed");
  bench_cmd->add_option("--out", bench_opt.out, "benchmark CSV")->required();
  bench_cmd->add_option("--manifest", ctx.manifest_path, "manifest JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  shap_opt.seed_given = shap_seed->count() > 0;
  bounds_opt.seed_given = bounds_seed->count() > 0;
  gp_opt.seed_given = gp_seed->count() > 0;
  pipeline_opt.seed_given = pipeline_seed->count() > 0;
  bench_opt.seed_given = bench_seed->count() > 0;

  if (*basis_cmd) {
    ctx.subcommand = "basis";
    return guarded(ctx, [&] { run_basis(ctx, basis_opt); });
  }
  if (*transform_cmd) {
    ctx.subcommand = "transform";
    return guarded(ctx, [&] { run_transform(ctx, transform_opt); });
  }
  if (*shap_cmd) {
    ctx.subcommand = "shap";
    return guarded(ctx, [&] { run_shap(ctx, shap_opt); });
  }
  if (*bounds_cmd) {
    ctx.subcommand = "bounds";
    return guarded(ctx, [&] { run_bounds(ctx, bounds_opt); });
  }
  if (*gp_cmd) {
    ctx.subcommand = "gp";
    return guarded(ctx, [&] { run_gp(ctx, gp_opt); });
  }
  if (*pipeline_cmd) {
    ctx.subcommand = "pipeline";
    return guarded(ctx, [&] { run_pipeline(ctx, pipeline_opt); });
  }
  if (*bench_cmd) {
    ctx.subcommand = "bench";
    return guarded(ctx, [&] { run_bench(ctx, bench_opt); });
  }
  std::cerr << "error (config): no subcommand given\n";
  return kExitConfigError;
}

}  // namespace fshap::cli
