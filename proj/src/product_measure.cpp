#include "fshap/product_measure.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fshap/format.hpp"
#include "fshap/hash.hpp"

namespace fshap {

namespace {
constexpr double kSumTolerance = 1e-12;
}

ProductMeasure::ProductMeasure(FeatureSpace space,
                               std::vector<std::vector<double>> marginals)
    : space_(std::move(space)), marginals_(std::move(marginals)) {
  if (static_cast<int>(marginals_.size()) != space_.feature_count()) {
    throw DimensionError("measure has " + std::to_string(marginals_.size()) +
                         " marginals; space has " +
                         std::to_string(space_.feature_count()) + " features");
  }
  for (int i = 0; i < space_.feature_count(); ++i) {
    const auto& m = marginals_[static_cast<std::size_t>(i)];
    if (static_cast<int>(m.size()) != space_.cardinality(i)) {
      throw DimensionError("marginal " + std::to_string(i) + " has " +
                           std::to_string(m.size()) + " weights; feature has " +
                           std::to_string(space_.cardinality(i)) + " states");
    }
    double sum = 0.0;
    for (std::size_t s = 0; s < m.size(); ++s) {
      const double p = m[s];
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw MeasureSupportError("marginal " + std::to_string(i) + " state " +
                                  std::to_string(s) + " has weight " +
                                  format_g17(p) + "; full support requires > 0");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw MeasureSupportError("marginal " + std::to_string(i) + " sums to " +
                                format_g17(sum) + "; expected 1 within 1e-12");
    }
  }
}

ProductMeasure ProductMeasure::uniform(FeatureSpace space) {
  std::vector<std::vector<double>> marginals;
  marginals.reserve(static_cast<std::size_t>(space.feature_count()));
  for (int i = 0; i < space.feature_count(); ++i) {
    const int m = space.cardinality(i);
    marginals.emplace_back(static_cast<std::size_t>(m), 1.0 / m);
  }
  return ProductMeasure(std::move(space), std::move(marginals));
}

const std::vector<double>& ProductMeasure::marginal(int feature) const {
  space_.cardinality(feature);  // range check
  return marginals_[static_cast<std::size_t>(feature)];
}

double ProductMeasure::mass(int feature, int state) const {
  const auto& m = marginal(feature);
  if (state < 0 || state >= static_cast<int>(m.size())) {
    throw DimensionError("state " + std::to_string(state) + " of feature " +
                         std::to_string(feature) + " outside [0, " +
                         std::to_string(m.size()) + ")");
  }
  return m[static_cast<std::size_t>(state)];
}

double ProductMeasure::state_mass(std::span<const int> state) const {
  space_.validate_state(state);
  double w = 1.0;
  for (int i = 0; i < space_.feature_count(); ++i) {
    w *= marginals_[static_cast<std::size_t>(i)]
                   [static_cast<std::size_t>(state[static_cast<std::size_t>(i)])];
  }
  return w;
}

std::vector<double> ProductMeasure::dense_mass(std::size_t dense_limit) const {
  if (space_.total_states() > dense_limit) {
    throw DenseLimitError("dense mass table needs " +
                          std::to_string(space_.total_states()) +
                          " states; limit is " + std::to_string(dense_limit));
  }
  std::vector<double> table;
  table.reserve(space_.total_states());
  for_each_state(space_, [&](std::span<const int> state) {
    double w = 1.0;
    for (int i = 0; i < space_.feature_count(); ++i) {
      w *= marginals_[static_cast<std::size_t>(i)]
                     [static_cast<std::size_t>(state[static_cast<std::size_t>(i)])];
    }
    table.push_back(w);
  });
  return table;
}

std::string ProductMeasure::content_hash() const {
  std::string canon;
  for (int i = 0; i < space_.feature_count(); ++i) {
    if (i) canon += ";";
    canon += std::to_string(space_.cardinality(i));
  }
  canon += "|";
  for (int i = 0; i < space_.feature_count(); ++i) {
    if (i) canon += ";";
    const auto& m = marginals_[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (s) canon += ",";
      canon += format_g17(m[s]);
    }
  }
  return fnv1a64_hex(canon);
}

ProductMeasure ProductMeasure::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open measure file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("measure file " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("cardinalities") || !doc.contains("measures")) {
    throw SchemaError("measure file " + path +
                      ": expected object with 'cardinalities' and 'measures'");
  }
  for (const auto& item : doc.items()) {
    if (item.key() != "cardinalities" && item.key() != "measures") {
      throw SchemaError("measure file " + path + ": unknown key '" + item.key() + "'");
    }
  }
  std::vector<int> cards;
  std::vector<std::vector<double>> marginals;
  try {
    cards = doc.at("cardinalities").get<std::vector<int>>();
    marginals = doc.at("measures").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("measure file " + path + ": " + e.what());
  }
  return ProductMeasure(FeatureSpace(std::move(cards)), std::move(marginals));
}

void ProductMeasure::save_json(const std::string& path) const {
  // Hand-formatted so doubles serialize with %.17g and bytes are stable.
  std::string out = "{\"cardinalities\":[";
  for (int i = 0; i < space_.feature_count(); ++i) {
    if (i) out += ",";
    out += std::to_string(space_.cardinality(i));
  }
  out += "],\"measures\":[";
  for (int i = 0; i < space_.feature_count(); ++i) {
    if (i) out += ",";
    out += "[";
    const auto& m = marginals_[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (s) out += ",";
      out += format_g17(m[s]);
    }
    out += "]";
  }
  out += "]}\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write measure file: " + path);
  f << out;
}

}  // namespace fshap
