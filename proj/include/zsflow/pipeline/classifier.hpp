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
#include <span>
#include <vector>

#include "zsflow/data/dataset.hpp"
#include "zsflow/numcore/mlp.hpp"
#include "zsflow/pipeline/config.hpp"

namespace zsflow {

// Linear softmax classifier. Output slot k scores class class_ids()[k].
class Classifier {
 public:
  Classifier() = default;
  // Throws ConfigError unless `linear` is one identity layer with one output per class id.
  Classifier(Mlp linear, std::vector<std::size_t> class_ids);

  static Classifier random(std::size_t d_v, std::vector<std::size_t> class_ids, Rng& rng);

  std::size_t d_v() const noexcept { return net_.in_dim(); }
  std::size_t num_outputs() const noexcept { return class_ids_.size(); }
  const std::vector<std::size_t>& class_ids() const noexcept { return class_ids_; }
  const Mlp& net() const noexcept { return net_; }
  Mlp& net() noexcept { return net_; }

  Matrix logits(const Matrix& x) const;
  // Class id of the arg-max logit per row; ties go to the lower slot.
  std::vector<std::size_t> predict(const Matrix& x) const;
  // Arg-max over the listed class ids only; ties go to the earlier entry of `classes`.
  std::vector<std::size_t> predict_within(const Matrix& x, std::span<const std::size_t> classes) const;

  bool operator==(const Classifier&) const = default;

 private:
  Mlp net_;
  std::vector<std::size_t> class_ids_;
};

// Mean softmax cross entropy. The grad version overwrites `tape`.
double cross_entropy(const Classifier& clf, const Matrix& x, std::span<const std::size_t> labels);
double cross_entropy_grad(const Classifier& clf, const Matrix& x,
                          std::span<const std::size_t> labels, GradTape& tape);

struct ClassifierTraining {
  Classifier classifier;
  std::vector<double> history;  // mean training loss per epoch
};

// Adam on cross entropy over `data`, whose labels must all be in `class_ids`.
// Samples are put in a canonical order before the seeded shuffle, so the
// result does not depend on how the rows were supplied. Throws
// DivergenceError on a non-finite loss.
ClassifierTraining train_classifier(const LabeledFeatures& data, std::vector<std::size_t> class_ids,
                                    const ClassifierConfig& config, std::uint64_t seed);

// Real seen features plus synthetic unseen features, over all classes.
ClassifierTraining train_classifier(const LabeledFeatures& real_seen,
                                    const LabeledFeatures& synth_unseen, std::size_t num_classes,
                                    const ClassifierConfig& config, std::uint64_t seed);

struct ClassAccuracy {
  std::size_t class_id = 0;
  double accuracy = 0.0;

  bool operator==(const ClassAccuracy&) const = default;
};

struct PerClassAccuracy {
  std::vector<ClassAccuracy> per_class;
  double mean = 0.0;
};

// Top-1 accuracy of each class in `class_set` over the samples carrying that
// label, then the unweighted mean over classes. Samples of other classes are
// ignored. Throws InputError if a class has no sample.
PerClassAccuracy per_class_accuracy(std::span<const std::size_t> predictions,
                                    std::span<const std::size_t> labels,
                                    std::span<const std::size_t> class_set);
PerClassAccuracy per_class_accuracy(const Classifier& clf, const Matrix& features,
                                    std::span<const std::size_t> labels,
                                    std::span<const std::size_t> class_set);

// 2 s u / (s + u), or 0 when both are 0.
double harmonic_mean(double acc_seen, double acc_unseen);

}  // namespace zsflow
