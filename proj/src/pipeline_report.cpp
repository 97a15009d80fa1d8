#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fshap/csv.hpp"
#include "fshap/format.hpp"
#include "fshap/parallel.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

namespace {

// Ranks descending by value; equal values rank by feature order (the entry
// list is already in ascending feature order).
void fill_ranks(std::vector<BinReportEntry>& entries,
                double BinReportEntry::* value, int BinReportEntry::* rank) {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return entries[a].*value > entries[b].*value;
                   });
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    entries[order[pos]].*rank = static_cast<int>(pos) + 1;
}

}  // namespace

std::vector<BinReport> per_bin_report(const SparseFourierModel& model,
                                      const std::vector<std::vector<int>>& rows,
                                      const PerBinConfig& config) {
  const FeatureSpace& space = model.space();
  const int n = space.feature_count();
  if (config.split_feature < 0 || config.split_feature >= n)
    throw ParameterError("per_bin_report: split feature out of range");
  for (const auto& row : rows) space.validate_state(row);

  // Per-row attributions for both methods, computed once in parallel; the
  // kernel estimator sees the model only through its evaluation call.
  const Predictor h = make_predictor(model);
  const ProductMeasure& mu = model.measure();
  std::vector<Attribution> fourier(rows.size());
  std::vector<Attribution> kernel(rows.size());
  parallel_for(rows.size(), [&](std::size_t r) {
    fourier[r] = fourier_shap(model, rows[r]);
    kernel[r] = kernel_shap(h, rows[r], mu, config.kernel_budget,
                            config.seed + static_cast<std::uint64_t>(r));
  }, config.threads);

  const int bins = space.cardinality(config.split_feature);
  std::vector<BinReport> reports(static_cast<std::size_t>(bins));
  std::vector<std::vector<double>> sum_f(static_cast<std::size_t>(bins)),
      sum_k(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    sum_f[static_cast<std::size_t>(b)].assign(static_cast<std::size_t>(n), 0.0);
    sum_k[static_cast<std::size_t>(b)].assign(static_cast<std::size_t>(n), 0.0);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto b = static_cast<std::size_t>(
        rows[r][static_cast<std::size_t>(config.split_feature)]);
    reports[b].rows += 1;
    for (int i = 0; i < n; ++i) {
      sum_f[b][static_cast<std::size_t>(i)] +=
          std::fabs(fourier[r].phi[static_cast<std::size_t>(i)]);
      sum_k[b][static_cast<std::size_t>(i)] +=
          std::fabs(kernel[r].phi[static_cast<std::size_t>(i)]);
    }
  }

  for (int b = 0; b < bins; ++b) {
    BinReport& report = reports[static_cast<std::size_t>(b)];
    report.bin = b;
    const double count = static_cast<double>(report.rows);
    for (int i = 0; i < n; ++i) {
      if (i == config.split_feature) continue;
      BinReportEntry entry;
      entry.feature = i;
      if (report.rows > 0) {
        entry.fourier = sum_f[static_cast<std::size_t>(b)]
                             [static_cast<std::size_t>(i)] / count;
        entry.kernel = sum_k[static_cast<std::size_t>(b)]
                            [static_cast<std::size_t>(i)] / count;
      }
      entry.delta = entry.fourier - entry.kernel;
      report.entries.push_back(entry);
    }
    fill_ranks(report.entries, &BinReportEntry::fourier,
               &BinReportEntry::rank_fourier);
    fill_ranks(report.entries, &BinReportEntry::kernel,
               &BinReportEntry::rank_kernel);
  }
  return reports;
}

void write_per_bin_csv(std::ostream& out, const std::vector<BinReport>& reports,
                       const std::vector<std::string>& names) {
  out << "bin,rows,feature,fourier_shap,kernel_shap,rank_fourier,rank_kernel,"
         "delta\n";
  for (const BinReport& report : reports) {
    for (const BinReportEntry& entry : report.entries) {
      const std::string name =
          static_cast<std::size_t>(entry.feature) < names.size()
              ? names[static_cast<std::size_t>(entry.feature)]
              : "f" + std::to_string(entry.feature);
      out << report.bin << ',' << report.rows << ',' << csv::escape(name)
          << ',' << format_g17(entry.fourier) << ','
          << format_g17(entry.kernel) << ',' << entry.rank_fourier << ','
          << entry.rank_kernel << ',' << format_g17(entry.delta) << "\n";
    }
  }
}

}  // namespace fshap::pipeline
