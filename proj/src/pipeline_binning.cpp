#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fshap/errors.hpp"
#include "fshap/format.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing_token(const std::string& cell) {
  if (cell.empty()) return true;
  std::string lower;
  lower.reserve(cell.size());
  for (char c : cell)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "na" || lower == "n/a" || lower == "nan" || lower == "null";
}

}  // namespace

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::missing_value: return "missing_value";
    case RejectReason::unparseable: return "unparseable";
    case RejectReason::below_domain: return "below_domain";
    case RejectReason::above_domain: return "above_domain";
    case RejectReason::unknown_category: return "unknown_category";
  }
  return "unknown";
}

int FeatureBinning::cardinality() const {
  if (kind == BinKind::numeric) return static_cast<int>(edges.size()) - 1;
  return static_cast<int>(categories.size());
}

BinOutcome FeatureBinning::bin(const std::string& raw_cell) const {
  BinOutcome out;
  const std::string cell = trim(raw_cell);
  if (is_missing_token(cell)) {
    out.rejected = RejectReason::missing_value;
    return out;
  }
  if (kind == BinKind::categorical) {
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (categories[i] == cell) {
        out.state = static_cast<int>(i);
        return out;
      }
    }
    out.rejected = RejectReason::unknown_category;
    return out;
  }
  double value = 0.0;
  try {
    value = parse_double(cell);
  } catch (const NumericError&) {
    out.rejected = RejectReason::unparseable;
    return out;
  }
  if (!std::isfinite(value)) {
    out.rejected = RejectReason::unparseable;
    return out;
  }
  if (value < edges.front()) {
    out.rejected = RejectReason::below_domain;
    return out;
  }
  if (value > edges.back()) {
    out.rejected = RejectReason::above_domain;
    return out;
  }
  // Bins are [e_j, e_{j+1}); the top endpoint folds into the last bin.
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  int idx = static_cast<int>(it - edges.begin()) - 1;
  if (idx >= cardinality()) idx = cardinality() - 1;
  BinOutcome ok;
  ok.state = idx;
  return ok;
}

std::string FeatureBinning::representative(int state) const {
  if (state < 0 || state >= cardinality())
    throw DimensionError("representative: state out of range for column '" +
                         column + "'");
  if (kind == BinKind::categorical) return categories[state];
  const double mid = 0.5 * (edges[state] + edges[state + 1]);
  return format_g17(mid);
}

FeatureSpace BinningScheme::space() const {
  std::vector<int> cards;
  cards.reserve(features.size());
  for (const auto& f : features) cards.push_back(f.cardinality());
  return FeatureSpace(cards);
}

std::vector<std::string> BinningScheme::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features.size());
  for (const auto& f : features) names.push_back(f.column);
  return names;
}

int BinningScheme::feature_index(const std::string& column) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].column == column) return static_cast<int>(i);
  return -1;
}

BinningScheme BinningScheme::stroke_defaults() {
  BinningScheme scheme;
  auto numeric = [](std::string column, std::vector<double> edges) {
    FeatureBinning f;
    f.column = std::move(column);
    f.kind = BinKind::numeric;
    f.edges = std::move(edges);
    return f;
  };
  auto categorical = [](std::string column, std::vector<std::string> cats) {
    FeatureBinning f;
    f.column = std::move(column);
    f.kind = BinKind::categorical;
    f.categories = std::move(cats);
    return f;
  };
  scheme.features.push_back(categorical("gender", {"Male", "Female"}));
  scheme.features.push_back(
      numeric("age", {2, 16, 27, 37, 45, 53, 61, 72, 82}));
  scheme.features.push_back(categorical("hypertension", {"0", "1"}));
  scheme.features.push_back(categorical("heart_disease", {"0", "1"}));
  scheme.features.push_back(categorical("ever_married", {"No", "Yes"}));
  scheme.features.push_back(categorical(
      "work_type",
      {"Private", "Self-employed", "Govt_job", "children", "Never_worked"}));
  scheme.features.push_back(categorical("Residence_type", {"Rural", "Urban"}));
  scheme.features.push_back(numeric(
      "avg_glucose_level", {55, 70, 100, 110, 126, 155, 200, 250, 272}));
  scheme.features.push_back(
      numeric("bmi", {11, 18.5, 25, 30, 35, 40, 50, 60, 97.6}));
  scheme.features.push_back(categorical(
      "smoking_status", {"never smoked", "Unknown", "formerly smoked", "smokes"}));
  return scheme;
}

namespace {

void validate_binning(const FeatureBinning& f) {
  if (f.column.empty()) throw SchemaError("binning: empty column name");
  if (f.kind == BinKind::numeric) {
    if (f.edges.size() < 3)
      throw SchemaError("binning column '" + f.column +
                        "': need at least 3 edges (2 bins)");
    for (std::size_t i = 0; i + 1 < f.edges.size(); ++i) {
      if (!(f.edges[i] < f.edges[i + 1]))
        throw SchemaError("binning column '" + f.column +
                          "': edges must be strictly increasing");
    }
    for (double e : f.edges)
      if (!std::isfinite(e))
        throw SchemaError("binning column '" + f.column +
                          "': non-finite edge");
  } else {
    if (f.categories.size() < 2)
      throw SchemaError("binning column '" + f.column +
                        "': need at least 2 categories");
    for (std::size_t i = 0; i < f.categories.size(); ++i)
      for (std::size_t j = i + 1; j < f.categories.size(); ++j)
        if (f.categories[i] == f.categories[j])
          throw SchemaError("binning column '" + f.column +
                            "': duplicate category '" + f.categories[i] + "'");
  }
}

}  // namespace

BinningScheme BinningScheme::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open binning scheme file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("binning scheme '" + path + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("features"))
    throw SchemaError("binning scheme '" + path +
                      "': expected object with 'features'");
  for (const auto& item : doc.items()) {
    if (item.key() != "features")
      throw SchemaError("binning scheme '" + path + "': unknown key '" +
                        item.key() + "'");
  }
  if (!doc["features"].is_array())
    throw SchemaError("binning scheme '" + path + "': 'features' must be an array");
  BinningScheme scheme;
  for (const auto& jf : doc["features"]) {
    if (!jf.is_object())
      throw SchemaError("binning scheme '" + path + "': feature entries must be objects");
    FeatureBinning f;
    for (const auto& item : jf.items()) {
      const std::string& key = item.key();
      if (key != "column" && key != "type" && key != "edges" &&
          key != "categories")
        throw SchemaError("binning scheme '" + path + "': unknown key '" +
                          key + "'");
    }
    try {
      f.column = jf.at("column").get<std::string>();
      const std::string type = jf.at("type").get<std::string>();
      if (type == "numeric") {
        f.kind = BinKind::numeric;
        f.edges = jf.at("edges").get<std::vector<double>>();
        if (jf.contains("categories"))
          throw SchemaError("binning scheme '" + path + "': numeric column '" +
                            f.column + "' must not declare categories");
      } else if (type == "categorical") {
        f.kind = BinKind::categorical;
        f.categories = jf.at("categories").get<std::vector<std::string>>();
        if (jf.contains("edges"))
          throw SchemaError("binning scheme '" + path +
                            "': categorical column '" + f.column +
                            "' must not declare edges");
      } else {
        throw SchemaError("binning scheme '" + path + "': unknown type '" +
                          type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("binning scheme '" + path + "': " + e.what());
    }
    validate_binning(f);
    scheme.features.push_back(std::move(f));
  }
  if (scheme.features.empty())
    throw SchemaError("binning scheme '" + path + "': no features declared");
  for (std::size_t i = 0; i < scheme.features.size(); ++i)
    for (std::size_t j = i + 1; j < scheme.features.size(); ++j)
      if (scheme.features[i].column == scheme.features[j].column)
        throw SchemaError("binning scheme '" + path + "': duplicate column '" +
                          scheme.features[i].column + "'");
  return scheme;
}

void BinningScheme::save_json(const std::string& path) const {
  for (const auto& f : features) validate_binning(f);
  nlohmann::json doc;
  doc["features"] = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json jf;
    jf["column"] = f.column;
    if (f.kind == BinKind::numeric) {
      jf["type"] = "numeric";
      jf["edges"] = f.edges;
    } else {
      jf["type"] = "categorical";
      jf["categories"] = f.categories;
    }
    doc["features"].push_back(std::move(jf));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write binning scheme file: " + path);
  out << doc.dump(2) << "\n";
}

BinnedDataset bin_rows(const std::vector<std::vector<std::string>>& table,
                       const BinningScheme& scheme) {
  if (scheme.features.empty())
    throw SchemaError("bin_rows: scheme declares no features");
  for (const auto& f : scheme.features) validate_binning(f);
  if (table.empty()) throw SchemaError("bin_rows: table has no header row");

  const auto& header = table.front();
  std::vector<std::size_t> column_of(scheme.features.size());
  for (std::size_t i = 0; i < scheme.features.size(); ++i) {
    const std::string& want = scheme.features[i].column;
    bool found = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (trim(header[c]) == want) {
        column_of[i] = c;
        found = true;
        break;
      }
    }
    if (!found) throw SchemaError("bin_rows: missing column '" + want + "'");
  }

  BinnedDataset out{scheme.space(), {}, {}, {}};
  const std::size_t n = scheme.features.size();
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& cells = table[r];
    const std::size_t data_row = r - 1;
    std::vector<int> state(n);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const std::size_t c = column_of[i];
      const std::string cell = c < cells.size() ? cells[c] : std::string();
      BinOutcome res = scheme.features[i].bin(cell);
      if (res.rejected) {
        out.rejections.push_back(
            {data_row, scheme.features[i].column, *res.rejected, trim(cell)});
        ok = false;
      } else {
        state[i] = res.state;
      }
    }
    if (ok) {
      out.rows.push_back(std::move(state));
      out.source_rows.push_back(data_row);
    }
  }
  return out;
}

ProductMeasure empirical_measure(const FeatureSpace& space,
                                 const std::vector<std::vector<int>>& rows,
                                 double alpha) {
  if (alpha < 0.0 || !std::isfinite(alpha))
    throw ParameterError("empirical_measure: alpha must be finite and >= 0");
  const int n = space.feature_count();
  std::vector<std::vector<double>> marginals(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    marginals[static_cast<std::size_t>(i)]
        .assign(static_cast<std::size_t>(space.cardinality(i)), 0.0);
  for (const auto& row : rows) {
    space.validate_state(row);
    for (int i = 0; i < n; ++i)
      marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(row[static_cast<std::size_t>(i)])] += 1.0;
  }
  const double total = static_cast<double>(rows.size());
  for (int i = 0; i < n; ++i) {
    auto& m = marginals[static_cast<std::size_t>(i)];
    const double denom = total + alpha * static_cast<double>(m.size());
    if (denom <= 0.0)
      throw DataError("empirical_measure: no rows and alpha = 0");
    for (double& v : m) v = (v + alpha) / denom;
  }
  return ProductMeasure(space, std::move(marginals));
}

double logit(double p, bool* clamped) {
  if (!std::isfinite(p)) throw NumericError("logit: non-finite probability");
  bool hit = false;
  if (p < kLogitEpsilon) {
    p = kLogitEpsilon;
    hit = true;
  } else if (p > 1.0 - kLogitEpsilon) {
    p = 1.0 - kLogitEpsilon;
    hit = true;
  }
  if (clamped != nullptr) *clamped = hit;
  return std::log(p / (1.0 - p));
}

double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::vector<double> logit_column(std::span<const double> probs,
                                 std::size_t* clamp_count) {
  std::vector<double> out;
  out.reserve(probs.size());
  std::size_t clamps = 0;
  for (double p : probs) {
    bool hit = false;
    out.push_back(logit(p, &hit));
    if (hit) ++clamps;
  }
  if (clamp_count != nullptr) *clamp_count = clamps;
  if (clamps > 0)
    std::fprintf(stderr, "[logit] clamped %zu of %zu probabilities to [%g, %g]\n",
                 clamps, probs.size(), kLogitEpsilon, 1.0 - kLogitEpsilon);
  return out;
}

}  // namespace fshap::pipeline
