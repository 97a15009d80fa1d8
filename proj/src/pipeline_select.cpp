#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "fshap/errors.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

namespace {

// Order used everywhere: bigger |r| first, lexicographically smaller index on
// ties (so results are deterministic and a constant target degrades to plain
// lexicographic order).
bool better(const ScoredAtom& a, const ScoredAtom& b) {
  const double fa = std::fabs(a.correlation);
  const double fb = std::fabs(b.correlation);
  if (fa != fb) return fa > fb;
  return a.k < b.k;
}

void keep_top(std::vector<ScoredAtom>& v, int budget) {
  std::sort(v.begin(), v.end(), better);
  if (budget >= 0 && v.size() > static_cast<std::size_t>(budget))
    v.resize(static_cast<std::size_t>(budget));
}

struct TargetStats {
  Eigen::ArrayXd centered;
  double ss = 0.0;        // sum of squared deviations
  bool degenerate = false;
};

TargetStats target_stats(std::span<const double> targets) {
  TargetStats st;
  const Eigen::Index r = static_cast<Eigen::Index>(targets.size());
  Eigen::Map<const Eigen::ArrayXd> t(targets.data(), r);
  const double mean = t.mean();
  st.centered = t - mean;
  st.ss = st.centered.square().sum();
  const double scale = t.square().sum();
  st.degenerate = !(st.ss > scale * 1e-24) || st.ss == 0.0;
  return st;
}

// Pearson r of `col` against the centered target; nullopt marks a
// zero-variance column (excluded from ranking).
std::optional<double> pearson(const Eigen::ArrayXd& col, const TargetStats& t,
                              bool degenerate) {
  const double mean = col.mean();
  const Eigen::ArrayXd centered = col - mean;
  const double ss = centered.square().sum();
  const double scale = col.square().sum();
  if (!(ss > scale * 1e-24) || ss == 0.0) return std::nullopt;
  if (degenerate) return 0.0;
  const double cov = (centered * t.centered).sum();
  double r = cov / std::sqrt(ss * t.ss);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace

std::vector<MultiIndex> AtomSelection::atoms() const {
  std::vector<MultiIndex> out;
  out.reserve(size());
  for (const auto& a : univariate) out.push_back(a.k);
  for (const auto& a : pairs) out.push_back(a.k);
  for (const auto& a : triples) out.push_back(a.k);
  return out;
}

std::size_t AtomSelection::size() const {
  return univariate.size() + pairs.size() + triples.size();
}

AtomSelection select_atoms(const TensorBasis& basis,
                           const std::vector<std::vector<int>>& rows,
                           std::span<const double> targets,
                           const SelectionConfig& config) {
  if (rows.empty()) throw DataError("select_atoms: empty dataset");
  if (targets.size() != rows.size())
    throw DataError("select_atoms: targets/rows size mismatch");
  for (double t : targets)
    if (!std::isfinite(t))
      throw NumericError("select_atoms: non-finite target value");
  if (config.k1 < 0 || config.k2 < 0 || config.k3 < 0)
    throw ParameterError("select_atoms: stage budgets must be >= 0");
  if (config.per_feature_top < 1)
    throw ParameterError("select_atoms: per_feature_top must be >= 1");
  if (config.d_max < 1)
    throw ParameterError("select_atoms: d_max must be >= 1");

  const FeatureSpace& space = basis.space();
  const int n = space.feature_count();
  const Eigen::Index r_count = static_cast<Eigen::Index>(rows.size());
  for (const auto& row : rows) space.validate_state(row);

  const TargetStats tstats = target_stats(targets);
  AtomSelection sel;
  sel.config = config;
  sel.degenerate_target = tstats.degenerate;
  if (tstats.degenerate)
    std::fprintf(stderr,
                 "[select_atoms] constant target: correlations are all zero, "
                 "falling back to lexicographic order\n");

  // Univariate mode columns, evaluated once: column(i, j-1)[r] = psi_{i,j}
  // at row r. Everything downstream is an elementwise product of these.
  std::vector<std::vector<Eigen::ArrayXd>> cols(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const CoordinateBasis& cb = basis.coordinate(i);
    cols[static_cast<std::size_t>(i)].reserve(
        static_cast<std::size_t>(space.cardinality(i) - 1));
    for (int j = 1; j < space.cardinality(i); ++j) {
      Eigen::ArrayXd col(r_count);
      for (Eigen::Index r = 0; r < r_count; ++r)
        col[r] = cb.value(j, rows[static_cast<std::size_t>(r)]
                                 [static_cast<std::size_t>(i)]);
      cols[static_cast<std::size_t>(i)].push_back(std::move(col));
    }
  }

  auto make_index = [n](std::initializer_list<std::pair<int, int>> parts) {
    MultiIndex k = MultiIndex::zeros(n);
    for (const auto& [feature, mode] : parts) k.digits[static_cast<std::size_t>(feature)] = mode;
    return k;
  };

  // Stage 1: every univariate mode, scored.
  std::vector<ScoredAtom> uni_all;
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < space.cardinality(i); ++j) {
      const auto r = pearson(cols[static_cast<std::size_t>(i)]
                                 [static_cast<std::size_t>(j - 1)],
                             tstats, tstats.degenerate);
      if (r) uni_all.push_back({make_index({{i, j}}), *r});
    }
  }
  std::sort(uni_all.begin(), uni_all.end(), better);
  sel.univariate.assign(
      uni_all.begin(),
      uni_all.begin() + std::min<std::size_t>(uni_all.size(),
                                              static_cast<std::size_t>(config.k1)));
  if (config.d_max < 2) return sel;

  // Per-feature feeder for stages 2/3: each feature's top modes by the same
  // ranking, independent of the stage-1 budget.
  std::vector<std::vector<int>> top_modes(static_cast<std::size_t>(n));
  for (const ScoredAtom& a : uni_all) {
    const int i = a.k.support().front();
    auto& modes = top_modes[static_cast<std::size_t>(i)];
    if (modes.size() < static_cast<std::size_t>(config.per_feature_top))
      modes.push_back(a.k[i]);
  }

  // Stage 2: cross features pairwise.
  std::vector<ScoredAtom> pair_all;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int ja : top_modes[static_cast<std::size_t>(a)]) {
        for (int jb : top_modes[static_cast<std::size_t>(b)]) {
          const Eigen::ArrayXd col =
              cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(ja - 1)] *
              cols[static_cast<std::size_t>(b)][static_cast<std::size_t>(jb - 1)];
          const auto r = pearson(col, tstats, tstats.degenerate);
          if (r) pair_all.push_back({make_index({{a, ja}, {b, jb}}), *r});
        }
      }
    }
  }
  keep_top(pair_all, config.k2);
  sel.pairs = std::move(pair_all);
  if (config.d_max < 3) return sel;

  // Stage 3: extend each kept pair by a third feature's top modes; the same
  // triple can arise from different pairs, so dedup before scoring.
  std::set<MultiIndex> seen;
  std::vector<ScoredAtom> triple_all;
  for (const ScoredAtom& pair : sel.pairs) {
    const std::vector<int> supp = pair.k.support();
    for (int c = 0; c < n; ++c) {
      if (c == supp[0] || c == supp[1]) continue;
      for (int jc : top_modes[static_cast<std::size_t>(c)]) {
        MultiIndex k = pair.k;
        k.digits[static_cast<std::size_t>(c)] = jc;
        if (!seen.insert(k).second) continue;
        const Eigen::ArrayXd col =
            cols[static_cast<std::size_t>(supp[0])]
                [static_cast<std::size_t>(pair.k[supp[0]] - 1)] *
            cols[static_cast<std::size_t>(supp[1])]
                [static_cast<std::size_t>(pair.k[supp[1]] - 1)] *
            cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(jc - 1)];
        const auto r = pearson(col, tstats, tstats.degenerate);
        if (r) triple_all.push_back({std::move(k), *r});
      }
    }
  }
  keep_top(triple_all, config.k3);
  sel.triples = std::move(triple_all);
  return sel;
}

}  // namespace fshap::pipeline
