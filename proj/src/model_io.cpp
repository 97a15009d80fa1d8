#include <fstream>
#include <optional>

#include <json.hpp>

#include "fshap/format.hpp"
#include "fshap/spectral_model.hpp"

namespace fshap {

namespace {

SparseFourierModel load_model_jsonl_impl(const std::string& path,
                                         const ProductMeasure* expected) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("model file is empty: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "fshap-model" || header.value("version", 0) != 1) {
    throw SchemaError("model header: expected format 'fshap-model' version 1");
  }
  const std::string convention = header.value("basis", "");
  if (convention != kBasisConvention) {
    throw SchemaError("model header: unsupported basis convention '" + convention +
                      "'; this build writes '" + std::string(kBasisConvention) + "'");
  }
  std::vector<int> cards;
  std::string stored_hash;
  try {
    cards = header.at("cardinalities").get<std::vector<int>>();
    stored_hash = header.at("measure_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model header: " + std::string(e.what()));
  }

  std::optional<ProductMeasure> measure;
  if (expected != nullptr) {
    measure = *expected;
  } else if (header.contains("measures")) {
    std::vector<std::vector<double>> marginals;
    try {
      marginals = header.at("measures").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("model header: " + std::string(e.what()));
    }
    measure.emplace(FeatureSpace(cards), std::move(marginals));
  } else {
    throw DataError("model file " + path +
                    " embeds no measures; supply the measure explicitly");
  }
  if (measure->space().cardinalities() != cards) {
    throw DataError("model file " + path + ": measure cardinalities disagree");
  }
  if (measure->content_hash() != stored_hash) {
    throw DataError("model file " + path + ": measure hash mismatch (header " +
                    stored_hash + ", supplied " + measure->content_hash() + ")");
  }

  auto basis = make_tensor_basis(std::move(*measure));
  std::map<MultiIndex, double> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      MultiIndex k(rec.at("k").get<std::vector<int>>());
      const double coef = rec.at("coef").get<double>();
      if (!entries.emplace(std::move(k), coef).second) {
        throw DataError("model file " + path + " line " + std::to_string(line_no) +
                        ": duplicate multi-index");
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("model file " + path + " line " + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return SparseFourierModel(std::move(basis), std::move(entries));
}

}  // namespace

void save_model_jsonl(const SparseFourierModel& model, const std::string& path) {
  const auto& measure = model.measure();
  const auto& space = model.space();
  std::string out = "{\"format\":\"fshap-model\",\"version\":1,\"cardinalities\":[";
  for (int i = 0; i < space.feature_count(); ++i) {
    if (i) out += ",";
    out += std::to_string(space.cardinality(i));
  }
  out += "],\"measure_hash\":\"" + measure.content_hash() + "\",\"basis\":\"";
  out += kBasisConvention;
  out += "\",\"measures\":[";
  for (int i = 0; i < space.feature_count(); ++i) {
    if (i) out += ",";
    out += "[";
    const auto& m = measure.marginal(i);
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (s) out += ",";
      out += format_g17(m[s]);
    }
    out += "]";
  }
  out += "]}\n";
  for (const auto& [k, c] : model.entries()) {
    out += "{\"k\":[";
    for (int i = 0; i < k.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(k[i]);
    }
    out += "],\"coef\":" + format_g17(c) + "}\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file: " + path);
  f << out;
}

SparseFourierModel load_model_jsonl(const std::string& path) {
  return load_model_jsonl_impl(path, nullptr);
}

SparseFourierModel load_model_jsonl(const std::string& path,
                                    const ProductMeasure& measure) {
  return load_model_jsonl_impl(path, &measure);
}

}  // namespace fshap
