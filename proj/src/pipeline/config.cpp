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

#include "zsflow/pipeline/config.hpp"

#include <functional>
#include <map>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_count(std::size_t& field) {
  return [&field](const json& v) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("expected a non-negative integer");
    }
    field = v.get<std::size_t>();
  };
}

Setter set_seed(std::uint64_t& field) {
  return [&field](const json& v) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError("expected a non-negative integer");
    }
    field = v.get<std::uint64_t>();
  };
}

void apply(const json& doc, const std::map<std::string, Setter>& setters, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown field '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ConfigError(std::string("train: ") + name + " must be positive");
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0)) throw ConfigError(std::string("train: ") + name + " must be non-negative");
}

void require_nonzero(std::size_t v, const char* name) {
  if (v == 0) throw ConfigError(std::string("train: ") + name + " must be at least 1");
}

}  // namespace

TrainConfig TrainConfig::desk_scale() {
  TrainConfig cfg;
  cfg.hidden_dim = 64;
  cfg.d_g = 32;
  return cfg;
}

void TrainConfig::validate() const {
  require_nonzero(batch_size, "batch_size");
  require_positive(lr, "lr");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: beta2 must lie in [0, 1)");
  require_nonzero(n_layers, "L");
  require_nonzero(hidden_dim, "hidden_dim");
  require_nonzero(d_g, "d_g");
  require_non_negative(lambda_ent, "lambda_ent");
  require_non_negative(lambda_perturb, "lambda_perturb");
  require_non_negative(lambda_proto, "lambda_proto");
  require_non_negative(weight_decay, "weight_decay");
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ConfigError("train: p_drop must lie in [0, 1]");
  if (mining.enabled) {
    require_positive(mining.eta, "mining.eta");
    require_nonzero(mining.steps, "mining.K");
    if (!(mining.cap_fraction >= 0.0 && mining.cap_fraction <= 1.0)) {
      throw ConfigError("train: mining.cap_fraction must lie in [0, 1]");
    }
    require_nonzero(mining.contrastive_hidden, "mining.contrastive_hidden");
    require_nonzero(mining.contrastive_batch, "mining.contrastive_batch");
    require_positive(mining.contrastive_lr, "mining.contrastive_lr");
  }
  require_nonzero(classifier.batch_size, "classifier.batch_size");
  require_positive(classifier.lr, "classifier.lr");
}

MiningConfig TrainConfig::mining_config() const {
  return MiningConfig{.eta = mining.eta,
                      .steps = mining.steps,
                      .lambda_ent = lambda_ent,
                      .sign_mode = mining.sign_mode};
}

PerturbConfig TrainConfig::perturb_config() const {
  return PerturbConfig{.lambda_perturb = lambda_perturb, .p_drop = p_drop};
}

json sweep_ranges() {
  return {{"lambda_perturb", {0.02, 0.05, 0.1, 0.2, 0.5}},
          {"lambda_proto", {1, 3, 10, 20, 30}},
          {"L", {1, 3, 5, 10, 20}},
          {"d_g", {128, 256, 512, 1024, 2048}}};
}

json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"L", cfg.n_layers},
          {"hidden_dim", cfg.hidden_dim},
          {"d_g", cfg.d_g},
          {"s_cap", cfg.s_cap},
          {"lambda_ent", cfg.lambda_ent},
          {"lambda_perturb", cfg.lambda_perturb},
          {"lambda_proto", cfg.lambda_proto},
          {"weight_decay", cfg.weight_decay},
          {"p_drop", cfg.p_drop},
          {"perturbation", cfg.perturbation},
          {"relative_positioning", cfg.relative_positioning},
          {"mining",
           {{"enabled", cfg.mining.enabled},
            {"eta", cfg.mining.eta},
            {"K", cfg.mining.steps},
            {"sign_mode", std::string(to_string(cfg.mining.sign_mode))},
            {"cap_fraction", cfg.mining.cap_fraction},
            {"contrastive_hidden", cfg.mining.contrastive_hidden},
            {"contrastive_epochs", cfg.mining.contrastive_epochs},
            {"contrastive_batch", cfg.mining.contrastive_batch},
            {"contrastive_lr", cfg.mining.contrastive_lr}}},
          {"n_syn_per_unseen", cfg.n_syn_per_unseen},
          {"classifier",
           {{"epochs", cfg.classifier.epochs},
            {"batch_size", cfg.classifier.batch_size},
            {"lr", cfg.classifier.lr}}},
          {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& doc, const TrainConfig& base) {
  TrainConfig cfg = base;
  MiningSettings& m = cfg.mining;
  ClassifierConfig& c = cfg.classifier;
  const std::map<std::string, Setter> mining_setters = {
      {"enabled", set(m.enabled)},
      {"eta", set(m.eta)},
      {"K", set_count(m.steps)},
      {"sign_mode", [&m](const json& v) { m.sign_mode = sign_mode_from_string(v.get<std::string>()); }},
      {"cap_fraction", set(m.cap_fraction)},
      {"contrastive_hidden", set_count(m.contrastive_hidden)},
      {"contrastive_epochs", set_count(m.contrastive_epochs)},
      {"contrastive_batch", set_count(m.contrastive_batch)},
      {"contrastive_lr", set(m.contrastive_lr)},
  };
  const std::map<std::string, Setter> classifier_setters = {
      {"epochs", set_count(c.epochs)},
      {"batch_size", set_count(c.batch_size)},
      {"lr", set(c.lr)},
  };
  const std::map<std::string, Setter> setters = {
      {"epochs", set_count(cfg.epochs)},
      {"batch_size", set_count(cfg.batch_size)},
      {"lr", set(cfg.lr)},
      {"beta1", set(cfg.beta1)},
      {"beta2", set(cfg.beta2)},
      {"L", set_count(cfg.n_layers)},
      {"hidden_dim", set_count(cfg.hidden_dim)},
      {"d_g", set_count(cfg.d_g)},
      {"s_cap", set(cfg.s_cap)},
      {"lambda_ent", set(cfg.lambda_ent)},
      {"lambda_perturb", set(cfg.lambda_perturb)},
      {"lambda_proto", set(cfg.lambda_proto)},
      {"weight_decay", set(cfg.weight_decay)},
      {"p_drop", set(cfg.p_drop)},
      {"perturbation", set(cfg.perturbation)},
      {"relative_positioning", set(cfg.relative_positioning)},
      {"mining", [&](const json& v) { apply(v, mining_setters, "train.mining"); }},
      {"n_syn_per_unseen", set_count(cfg.n_syn_per_unseen)},
      {"classifier", [&](const json& v) { apply(v, classifier_setters, "train.classifier"); }},
      {"seed", set_seed(cfg.seed)},
  };
  apply(doc, setters, "train");
  cfg.validate();
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  return {{"C_s", cfg.num_seen},
          {"C_u", cfg.num_unseen},
          {"d_v", cfg.d_v},
          {"d_a", cfg.d_a},
          {"samples_per_class", cfg.samples_per_class},
          {"attr_scale", cfg.attr_scale},
          {"map_noise", cfg.map_noise},
          {"within_class_std", cfg.within_class_std},
          {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("synth: expected a JSON object");
  for (const char* key : {"C_s", "C_u", "d_v", "d_a", "samples_per_class"}) {
    if (!doc.contains(key)) throw ConfigError(std::string("synth: missing required field '") + key + "'");
  }
  SynthConfig cfg;
  const std::map<std::string, Setter> setters = {
      {"C_s", set_count(cfg.num_seen)},
      {"C_u", set_count(cfg.num_unseen)},
      {"d_v", set_count(cfg.d_v)},
      {"d_a", set_count(cfg.d_a)},
      {"samples_per_class", set_count(cfg.samples_per_class)},
      {"attr_scale", set(cfg.attr_scale)},
      {"map_noise", set(cfg.map_noise)},
      {"within_class_std", set(cfg.within_class_std)},
      {"seed", set_seed(cfg.seed)},
  };
  apply(doc, setters, "synth");
  cfg.validate();
  return cfg;
}

}  // namespace zsflow
