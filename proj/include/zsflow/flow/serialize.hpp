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

#include "json.hpp"

#include "zsflow/flow/flow_model.hpp"

namespace zsflow {

inline constexpr int kFlowFormatVersion = 1;

// {"weights": [W_0, W_1, ...], "biases": [b_0, ...], "activations": [...]},
// each W_l a nested out x in array.
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

// {format_version, d_v, d_g, L, hidden_dim, s_cap, layers: [{s1, s2, t1, t2}]}.
// Doubles are written with round-trip-exact decimal text, so a save/load
// cycle reproduces every parameter bit for bit.
nlohmann::json flow_to_json(const FlowModel& model);

// Throws ConfigError on a version mismatch or malformed document.
FlowModel flow_from_json(const nlohmann::json& doc);

}  // namespace zsflow
