// Copyright 2026 The zsflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "zsflow/flow/serialize.hpp"

#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

using nlohmann::json;

namespace {

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ConfigError(std::string("model file: missing field '") + key + "'");
  }
  return doc.at(key);
}

}  // namespace

json mlp_to_json(const Mlp& net) {
  json weights = json::array();
  json biases = json::array();
  json acts = json::array();
  for (const auto& layer : net.layers()) {
    json w = json::array();
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      w.push_back(std::vector<double>(layer.weight.row(r).begin(), layer.weight.row(r).end()));
    }
    weights.push_back(std::move(w));
    biases.push_back(layer.bias);
    acts.push_back(std::string(to_string(layer.activation)));
  }
  return {{"weights", std::move(weights)}, {"biases", std::move(biases)}, {"activations", std::move(acts)}};
}

Mlp mlp_from_json(const json& doc) {
  try {
    const json& weights = require(doc, "weights");
    const json& biases = require(doc, "biases");
    const json& acts = require(doc, "activations");
    if (weights.size() != biases.size() || weights.size() != acts.size() || weights.empty()) {
      throw ConfigError("model file: weights, biases and activations must have equal length");
    }
    std::vector<Dense> layers;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const json& w = weights[l];
      const std::size_t rows = w.size();
      const std::size_t cols = rows == 0 ? 0 : w[0].size();
      std::vector<double> data;
      data.reserve(rows * cols);
      for (const auto& row : w) {
        if (row.size() != cols) throw ConfigError("model file: ragged weight matrix");
        for (const auto& v : row) data.push_back(v.get<double>());
      }
      layers.push_back(Dense{Matrix::from_data(rows, cols, std::move(data)),
                             biases[l].get<std::vector<double>>(),
                             activation_from_string(acts[l].get<std::string>())});
    }
    return Mlp(std::move(layers));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

json flow_to_json(const FlowModel& model) {
  json layers = json::array();
  for (const auto& layer : model.layers()) {
    layers.push_back({{"s1", mlp_to_json(layer.s1)},
                      {"s2", mlp_to_json(layer.s2)},
                      {"t1", mlp_to_json(layer.t1)},
                      {"t2", mlp_to_json(layer.t2)}});
  }
  return {{"format_version", kFlowFormatVersion},
          {"d_v", model.d_v()},
          {"d_g", model.d_g()},
          {"L", model.depth()},
          {"hidden_dim", model.hidden_dim()},
          {"s_cap", model.s_cap()},
          {"layers", std::move(layers)}};
}

FlowModel flow_from_json(const json& doc) {
  try {
    const int version = require(doc, "format_version").get<int>();
    if (version != kFlowFormatVersion) {
      throw ConfigError("model file: format_version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kFlowFormatVersion) + ")");
    }
    const auto d_v = require(doc, "d_v").get<std::size_t>();
    const auto d_g = require(doc, "d_g").get<std::size_t>();
    const auto depth = require(doc, "L").get<std::size_t>();
    const double s_cap = require(doc, "s_cap").get<double>();
    const json& layers_doc = require(doc, "layers");
    if (layers_doc.size() != depth) throw ConfigError("model file: L does not match layer count");
    std::vector<CouplingLayer> layers;
    for (const auto& l : layers_doc) {
      CouplingLayer layer;
      layer.d_v = d_v;
      layer.d_g = d_g;
      layer.s_cap = s_cap;
      layer.s1 = mlp_from_json(require(l, "s1"));
      layer.s2 = mlp_from_json(require(l, "s2"));
      layer.t1 = mlp_from_json(require(l, "t1"));
      layer.t2 = mlp_from_json(require(l, "t2"));
      layers.push_back(std::move(layer));
    }
    FlowModel model(std::move(layers));
    if (model.hidden_dim() != require(doc, "hidden_dim").get<std::size_t>()) {
      throw ConfigError("model file: hidden_dim does not match the stored networks");
    }
    return model;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

}  // namespace zsflow
