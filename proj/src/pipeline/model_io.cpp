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

#include "zsflow/pipeline/model_io.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "zsflow/errors.hpp"
#include "zsflow/flow/serialize.hpp"

namespace zsflow {

using nlohmann::json;

namespace {

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ConfigError(std::string("model file: missing field '") + key + "'");
  }
  return doc.at(key);
}

}  // namespace

json embedder_to_json(const SemanticEmbedder& embedder) {
  if (embedder.mode() == SemanticEmbedder::Mode::kRaw) {
    return {{"mode", "raw"}, {"d_a", embedder.in_dim()}};
  }
  const Anchors& a = embedder.anchors();
  return {{"mode", "relative"},
          {"d_a", embedder.in_dim()},
          {"d_g", embedder.out_dim()},
          {"anchors",
           {{"max", a.max},
            {"min", a.min},
            {"med", a.med},
            {"max_index", a.max_index},
            {"min_index", a.min_index},
            {"med_index", a.med_index}}},
          {"h_max", mlp_to_json(embedder.h_max())},
          {"h_min", mlp_to_json(embedder.h_min())},
          {"h_med", mlp_to_json(embedder.h_med())}};
}

SemanticEmbedder embedder_from_json(const json& doc) {
  try {
    const std::string mode = field(doc, "mode").get<std::string>();
    if (mode == "raw") return SemanticEmbedder::raw(field(doc, "d_a").get<std::size_t>());
    if (mode != "relative") throw ConfigError("model file: unknown embedder mode '" + mode + "'");
    const json& a = field(doc, "anchors");
    Anchors anchors;
    anchors.max = field(a, "max").get<Vector>();
    anchors.min = field(a, "min").get<Vector>();
    anchors.med = field(a, "med").get<Vector>();
    anchors.max_index = field(a, "max_index").get<std::size_t>();
    anchors.min_index = field(a, "min_index").get<std::size_t>();
    anchors.med_index = field(a, "med_index").get<std::size_t>();
    return SemanticEmbedder::relative(std::move(anchors), mlp_from_json(field(doc, "h_max")),
                                      mlp_from_json(field(doc, "h_min")),
                                      mlp_from_json(field(doc, "h_med")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

json model_to_json(const GsmflowModel& model) {
  json doc = flow_to_json(model.flow);
  doc["embedder"] = embedder_to_json(model.embedder);
  if (model.contrastive) {
    doc["contrastive"] = {{"d_v", model.contrastive->d_v()},
                          {"net", mlp_to_json(model.contrastive->net())}};
  }
  return doc;
}

GsmflowModel model_from_json(const json& doc) {
  GsmflowModel model;
  model.flow = flow_from_json(doc);
  model.embedder = embedder_from_json(field(doc, "embedder"));
  if (model.embedder.out_dim() != model.flow.d_g()) {
    throw ConfigError("model file: embedder output does not match the flow's d_g");
  }
  if (doc.contains("contrastive")) {
    const json& c = doc.at("contrastive");
    try {
      model.contrastive =
          ContrastiveNet(mlp_from_json(field(c, "net")), field(c, "d_v").get<std::size_t>());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("model file: ") + e.what());
    }
  }
  return model;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void save_model(const GsmflowModel& model, const std::filesystem::path& path) {
  write_text_atomic(path, model_to_json(model).dump() + "\n");
}

GsmflowModel load_model(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace zsflow
