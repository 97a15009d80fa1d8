#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "fshap/errors.hpp"
#include "fshap/pipeline.hpp"

namespace fshap::pipeline {

namespace {

void apply_activation(Eigen::VectorXd& v, const std::string& tag) {
  if (tag == "relu") {
    v = v.cwiseMax(0.0);
  } else if (tag == "tanh") {
    v = v.array().tanh().matrix();
  } else if (tag == "linear") {
    // identity
  } else {
    throw SchemaError("mlp: unknown activation '" + tag + "'");
  }
}

}  // namespace

MLP::MLP(std::vector<int> cardinalities, std::string encoding,
         std::vector<MLPLayer> layers)
    : cardinalities_(std::move(cardinalities)),
      encoding_(std::move(encoding)),
      layers_(std::move(layers)) {
  if (cardinalities_.empty()) throw SchemaError("mlp: no features declared");
  for (int m : cardinalities_)
    if (m < 2) throw SchemaError("mlp: cardinalities must be >= 2");
  if (encoding_ != "one_hot" && encoding_ != "ordinal")
    throw SchemaError("mlp: unknown encoding '" + encoding_ + "'");
  if (layers_.empty()) throw SchemaError("mlp: no layers declared");

  Eigen::Index dim = static_cast<Eigen::Index>(input_dim());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const MLPLayer& layer = layers_[l];
    if (layer.weight.cols() != dim)
      throw SchemaError("mlp: layer " + std::to_string(l) + " expects input " +
                        std::to_string(layer.weight.cols()) + ", got " +
                        std::to_string(dim));
    if (layer.bias.size() != layer.weight.rows())
      throw SchemaError("mlp: layer " + std::to_string(l) +
                        " bias/weight row mismatch");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw SchemaError("mlp: layer " + std::to_string(l) +
                        " has non-finite parameters");
    if (layer.activation != "relu" && layer.activation != "tanh" &&
        layer.activation != "linear")
      throw SchemaError("mlp: unknown activation '" + layer.activation + "'");
    dim = layer.weight.rows();
  }
  if (dim != 2)
    throw SchemaError("mlp: final layer must emit 2 scores for the softmax head");
}

std::size_t MLP::input_dim() const {
  if (encoding_ == "ordinal") return cardinalities_.size();
  std::size_t total = 0;
  for (int m : cardinalities_) total += static_cast<std::size_t>(m);
  return total;
}

Eigen::VectorXd MLP::encode(std::span<const int> state) const {
  if (state.size() != cardinalities_.size())
    throw DimensionError("mlp: state length mismatch");
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] < 0 || state[i] >= cardinalities_[i])
      throw DimensionError("mlp: state out of range at feature " +
                           std::to_string(i));
  if (encoding_ == "ordinal") {
    Eigen::VectorXd v(static_cast<Eigen::Index>(state.size()));
    for (std::size_t i = 0; i < state.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = static_cast<double>(state[i]);
    return v;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim()));
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    v[offset + state[i]] = 1.0;
    offset += cardinalities_[i];
  }
  return v;
}

Eigen::VectorXd MLP::scores(std::span<const int> state) const {
  Eigen::VectorXd v = encode(state);
  for (const MLPLayer& layer : layers_) {
    v = (layer.weight * v + layer.bias).eval();
    apply_activation(v, layer.activation);
    if (!v.allFinite())
      throw NumericError("mlp: non-finite activation during forward pass");
  }
  return v;
}

double MLP::logit(std::span<const int> state) const {
  const Eigen::VectorXd s = scores(state);
  // softmax(s)_1 / softmax(s)_0 == exp(s1 - s0), so the log-odds are exact.
  return s[1] - s[0];
}

Predictor MLP::predictor() const {
  MLP copy = *this;
  return [copy](std::span<const int> state) { return copy.logit(state); };
}

MLP MLP::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mlp weights file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("mlp weights '" + path + "': " + e.what());
  }
  if (!doc.is_object())
    throw SchemaError("mlp weights '" + path + "': expected a JSON object");
  for (const auto& item : doc.items()) {
    const std::string& key = item.key();
    if (key != "format" && key != "version" && key != "encoding" &&
        key != "cardinalities" && key != "layers")
      throw SchemaError("mlp weights '" + path + "': unknown key '" + key + "'");
  }
  try {
    if (doc.at("format").get<std::string>() != "fshap-mlp")
      throw SchemaError("mlp weights '" + path + "': wrong format tag");
    if (doc.at("version").get<int>() != 1)
      throw SchemaError("mlp weights '" + path + "': unsupported version");
    std::vector<int> cards = doc.at("cardinalities").get<std::vector<int>>();
    std::string encoding = doc.at("encoding").get<std::string>();
    std::vector<MLPLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      if (!jl.is_object())
        throw SchemaError("mlp weights '" + path + "': layers must be objects");
      for (const auto& item : jl.items()) {
        const std::string& key = item.key();
        if (key != "weight" && key != "bias" && key != "activation")
          throw SchemaError("mlp weights '" + path + "': unknown layer key '" +
                            key + "'");
      }
      auto rows = jl.at("weight").get<std::vector<std::vector<double>>>();
      if (rows.empty() || rows.front().empty())
        throw SchemaError("mlp weights '" + path + "': empty weight matrix");
      MLPLayer layer;
      layer.weight.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.front().size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size())
          throw SchemaError("mlp weights '" + path + "': ragged weight matrix");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          layer.weight(static_cast<Eigen::Index>(r),
                       static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      auto bias = jl.at("bias").get<std::vector<double>>();
      layer.bias = Eigen::Map<const Eigen::VectorXd>(
          bias.data(), static_cast<Eigen::Index>(bias.size()));
      layer.activation = jl.at("activation").get<std::string>();
      layers.push_back(std::move(layer));
    }
    return MLP(std::move(cards), std::move(encoding), std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("mlp weights '" + path + "': " + e.what());
  }
}

}  // namespace fshap::pipeline
