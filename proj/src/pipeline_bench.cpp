#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "fshap/format.hpp"
#include "fshap/memtrack.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Times one method: `warmup` discarded repetitions, then `reps` measured
// ones. Each repetition attributes every instance; a checksum keeps the
// optimizer from deleting the work.
template <typename Run>
MethodBench time_method(const std::string& name, std::size_t instances,
                        int reps, int warmup, Run&& run) {
  MethodBench bench;
  bench.method = name;
  bench.instances = instances;
  bench.mem_source = memtrack::available() ? "alloc_tracker" : "rss_delta";

  volatile double sink = 0.0;
  for (int i = 0; i < warmup; ++i) sink = sink + run();

  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(reps));
  std::size_t peak = 0;
  for (int i = 0; i < reps; ++i) {
    std::size_t before = 0;
    if (memtrack::available()) {
      memtrack::reset_peak();
      before = memtrack::peak_bytes();
    } else {
      before = memtrack::rss_peak_bytes();
    }
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + run();
    const auto t1 = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    const std::size_t after = memtrack::available()
                                  ? memtrack::peak_bytes()
                                  : memtrack::rss_peak_bytes();
    peak = std::max(peak, after > before ? after - before : 0);
  }
  (void)sink;
  bench.median_seconds = median(std::move(seconds));
  bench.per_instance_seconds =
      instances > 0 ? bench.median_seconds / static_cast<double>(instances)
                    : 0.0;
  bench.peak_mem_estimate = peak;
  return bench;
}

}  // namespace

BenchmarkReport run_benchmark(const SparseFourierModel& model,
                              const std::vector<std::vector<int>>& instances,
                              const BenchmarkConfig& config) {
  if (config.reps < 1)
    throw ParameterError("run_benchmark: reps must be >= 1");
  if (config.warmup < 0)
    throw ParameterError("run_benchmark: warmup must be >= 0");
  if (instances.empty())
    throw DataError("run_benchmark: no instances");
  const FeatureSpace& space = model.space();
  for (const auto& x : instances) space.validate_state(x);

  BenchmarkReport report;
  report.methods.push_back(time_method(
      "fourier", instances.size(), config.reps, config.warmup, [&]() {
        double acc = 0.0;
        for (const auto& x : instances) acc += fourier_shap(model, x).total();
        return acc;
      }));

  if (config.run_kernel) {
    const Predictor h = make_predictor(model);
    const ProductMeasure& mu = model.measure();
    report.methods.push_back(time_method(
        "kernel", instances.size(), config.reps, config.warmup, [&]() {
          double acc = 0.0;
          std::uint64_t r = 0;
          for (const auto& x : instances)
            acc += kernel_shap(h, x, mu, config.kernel_budget,
                               config.seed + r++).total();
          return acc;
        }));
    const double fourier_median = report.methods[0].median_seconds;
    const double kernel_median = report.methods[1].median_seconds;
    report.speedup = fourier_median > 0.0 ? kernel_median / fourier_median
                                          : std::numeric_limits<double>::infinity();
  }
  return report;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report,
                         int reps) {
  out << "method,instances,reps,median_seconds,per_instance_seconds,"
         "peak_mem_estimate_bytes,mem_source,speedup_vs_kernel\n";
  double kernel_median = 0.0;
  for (const MethodBench& m : report.methods)
    if (m.method == "kernel") kernel_median = m.median_seconds;
  for (const MethodBench& m : report.methods) {
    const double speedup =
        (kernel_median > 0.0 && m.median_seconds > 0.0)
            ? kernel_median / m.median_seconds
            : 0.0;
    out << m.method << ',' << m.instances << ',' << reps << ','
        << format_g17(m.median_seconds) << ','
        << format_g17(m.per_instance_seconds) << ',' << m.peak_mem_estimate
        << ',' << m.mem_source << ',' << format_g17(speedup) << "\n";
  }
}

}  // namespace fshap::pipeline
