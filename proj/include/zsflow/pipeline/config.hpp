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

#include <cstddef>
#include <cstdint>

#include "json.hpp"

#include "zsflow/augment/augment.hpp"
#include "zsflow/data/dataset.hpp"

namespace zsflow {

struct ClassifierConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double lr = 1e-3;
};

struct MiningSettings {
  bool enabled = true;
  double eta = 0.05;
  std::size_t steps = 10;  // K
  SignMode sign_mode = SignMode::kIntent;
  double cap_fraction = 1.0;  // share of the seen training samples that get a mined copy
  std::size_t contrastive_hidden = 64;
  std::size_t contrastive_epochs = 30;
  std::size_t contrastive_batch = 64;
  double contrastive_lr = 1e-3;
};

// Every hyper-parameter of one training run. Defaults follow the full-size
// setting (hidden width 2048, d_g 1024); desk_scale() shrinks the networks.
struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t n_layers = 3;  // L
  std::size_t hidden_dim = 2048;
  std::size_t d_g = 1024;
  double s_cap = 5.0;  // <= 0 disables the soft clamp on log-scales
  double lambda_ent = 1.0;
  double lambda_perturb = 0.05;
  double lambda_proto = 10.0;
  double weight_decay = 1e-5;
  double p_drop = 1.0;
  bool perturbation = true;
  bool relative_positioning = true;
  MiningSettings mining;
  std::size_t n_syn_per_unseen = 300;
  ClassifierConfig classifier;
  std::uint64_t seed = 0;

  static TrainConfig desk_scale();

  // Throws ConfigError naming the first offending field.
  void validate() const;

  MiningConfig mining_config() const;
  PerturbConfig perturb_config() const;
};

// Values swept for the sensitivity plots of the original experiments; kept
// for reference and exposed through the CLI, never read by training.
nlohmann::json sweep_ranges();

nlohmann::json to_json(const TrainConfig& cfg);
// Keys absent from `doc` keep their value in `base`; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& doc, const TrainConfig& base);

nlohmann::json to_json(const SynthConfig& cfg);
// C_s, C_u, d_v, d_a and samples_per_class are required.
SynthConfig synth_config_from_json(const nlohmann::json& doc);

}  // namespace zsflow
