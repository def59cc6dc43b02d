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

#pragma once

#include <filesystem>

#include "json.hpp"

#include "zsflow/pipeline/gsmflow.hpp"

namespace zsflow {

// The flow document (see flow_to_json) extended with "embedder" and, when
// present, "contrastive" sections.
nlohmann::json model_to_json(const GsmflowModel& model);
// Throws ConfigError on a format mismatch.
GsmflowModel model_from_json(const nlohmann::json& doc);

nlohmann::json embedder_to_json(const SemanticEmbedder& embedder);
SemanticEmbedder embedder_from_json(const nlohmann::json& doc);

// Writes via a temporary file and rename. Throws IoError.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void save_model(const GsmflowModel& model, const std::filesystem::path& path);
// Throws IoError when unreadable, ConfigError when malformed.
GsmflowModel load_model(const std::filesystem::path& path);

}  // namespace zsflow
