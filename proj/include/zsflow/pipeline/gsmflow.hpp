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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "zsflow/augment/augment.hpp"
#include "zsflow/data/dataset.hpp"
#include "zsflow/flow/flow_model.hpp"
#include "zsflow/pipeline/classifier.hpp"
#include "zsflow/pipeline/config.hpp"
#include "zsflow/semantics/semantics.hpp"

namespace zsflow {

struct EpochLog {
  std::size_t epoch = 0;
  double nll = 0.0;
  double prior = 0.0;
  double proto = 0.0;
  double total = 0.0;  // nll + prior + lambda_proto * proto, averaged over batches
};

struct MiningStats {
  std::size_t mined = 0;
  double entropy_before = 0.0;  // mean Shannon entropy of contrastive scores
  double entropy_after = 0.0;
  std::vector<double> contrastive_history;
};

struct GsmflowModel {
  FlowModel flow;
  SemanticEmbedder embedder;
  std::optional<ContrastiveNet> contrastive;

  bool operator==(const GsmflowModel&) const = default;
};

struct TrainingRun {
  GsmflowModel model;
  std::vector<EpochLog> log;
  std::optional<MiningStats> mining;
};

// Stage 1 (when mining is enabled): fit the contrastive net on the seen
// training set and append mined copies of the samples. Stage 2: Adam on the
// flow and embedder parameters for cfg.epochs epochs, with fresh perturbation
// of every training sample each epoch. Throws InputError for an empty seen set
// and DivergenceError naming the epoch on numerical failure.
TrainingRun train_gsmflow(const Dataset& ds, const TrainConfig& cfg);

// Condition vectors of the given class attribute rows.
Matrix class_conditions(const SemanticEmbedder& embedder, const Matrix& attributes);

// n_per_class latent draws per class pushed through the inverse flow. Draws
// for class k come from stream k + 1 of `seed`, so classes are independent
// of each other's sample counts.
LabeledFeatures generate_unseen(const FlowModel& flow, const SemanticEmbedder& embedder,
                                const Matrix& unseen_attributes,
                                std::span<const std::size_t> unseen_classes,
                                std::size_t n_per_class, std::uint64_t seed);

// The generate_unseen seed that run_pipeline derives from a run seed.
std::uint64_t generation_seed(std::uint64_t run_seed);

struct EvalReport {
  double acc_seen = 0.0;
  double acc_unseen = 0.0;
  double harmonic_mean = 0.0;
  double zsl_t1 = 0.0;
  std::vector<ClassAccuracy> per_class;      // GZSL, every test class
  std::vector<ClassAccuracy> zsl_per_class;  // restricted arg-max, unseen classes
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
};

enum class EvalMode { kGzsl, kZsl };

// GZSL: {acc_seen, acc_unseen, harmonic_mean, zsl_t1, per_class, config_echo, seed}.
// ZSL: {zsl_t1, per_class, config_echo, seed}, per_class being the restricted table.
nlohmann::json to_json(const EvalReport& report, EvalMode mode);

// Scores a trained classifier on the dataset's test splits.
EvalReport evaluate(const Classifier& clf, const Dataset& ds);

struct PipelineRun {
  TrainingRun training;
  LabeledFeatures synthetic;
  ClassifierTraining classifier;
  EvalReport report;
};

// train_gsmflow, generate_unseen, train_classifier, evaluate.
PipelineRun run_pipeline(const Dataset& ds, const TrainConfig& cfg);
EvalReport run_gzsl(const Dataset& ds, const TrainConfig& cfg);
EvalReport run_zsl(const Dataset& ds, const TrainConfig& cfg);

// A classifier over the seen classes only, trained on real features.
EvalReport run_seen_only_baseline(const Dataset& ds, const TrainConfig& cfg);

// Named component ablations of `cfg`, the full model first.
std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& cfg);

nlohmann::json to_json(const EpochLog& entry);
// One JSON object per line.
std::string to_jsonl(std::span<const EpochLog> log);

}  // namespace zsflow
