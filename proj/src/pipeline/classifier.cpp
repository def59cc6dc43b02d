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

#include "zsflow/pipeline/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "zsflow/errors.hpp"
#include "zsflow/numcore/adam.hpp"
#include "zsflow/numcore/rng.hpp"

namespace zsflow {

namespace {

std::vector<std::size_t> slots_for(const Classifier& clf, std::span<const std::size_t> labels) {
  const auto& ids = clf.class_ids();
  const std::size_t bound = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
  std::vector<std::size_t> slot_of(bound, ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) slot_of[ids[k]] = k;
  std::vector<std::size_t> slots(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= bound || slot_of[labels[i]] == ids.size()) {
      throw InputError("classifier: label " + std::to_string(labels[i]) +
                       " is not one of the classifier's classes");
    }
    slots[i] = slot_of[labels[i]];
  }
  return slots;
}

// Writes softmax probabilities into `logits` in place and returns the summed
// negative log-likelihood of `slots`.
double softmax_nll(Matrix& logits, std::span<const std::size_t> slots) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      denom += v;
    }
    for (double& v : row) v /= denom;
    total -= std::log(std::max(row[slots[r]], 1e-300));
  }
  return total;
}

}  // namespace

Classifier::Classifier(Mlp linear, std::vector<std::size_t> class_ids)
    : net_(std::move(linear)), class_ids_(std::move(class_ids)) {
  if (net_.layers().size() != 1 || net_.layers()[0].activation != Activation::kIdentity) {
    throw ConfigError("classifier must be a single linear layer");
  }
  if (net_.out_dim() != class_ids_.size() || class_ids_.empty()) {
    throw ConfigError("classifier output dimension must equal the number of classes");
  }
}

Classifier Classifier::random(std::size_t d_v, std::vector<std::size_t> class_ids, Rng& rng) {
  const std::size_t dims[] = {d_v, class_ids.size()};
  const Activation acts[] = {Activation::kIdentity};
  return Classifier(Mlp::random(dims, acts, rng), std::move(class_ids));
}

Matrix Classifier::logits(const Matrix& x) const { return net_.forward(x); }

std::vector<std::size_t> Classifier::predict(const Matrix& x) const {
  return predict_within(x, class_ids_);
}

std::vector<std::size_t> Classifier::predict_within(const Matrix& x,
                                                    std::span<const std::size_t> classes) const {
  const std::vector<std::size_t> slots = slots_for(*this, classes);
  const Matrix scores = logits(x);
  std::vector<std::size_t> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < slots.size(); ++k) {
      if (scores(r, slots[k]) > scores(r, slots[best])) best = k;
    }
    out[r] = classes[best];
  }
  return out;
}

double cross_entropy(const Classifier& clf, const Matrix& x, std::span<const std::size_t> labels) {
  const std::vector<std::size_t> slots = slots_for(clf, labels);
  Matrix probs = clf.logits(x);
  return softmax_nll(probs, slots) / static_cast<double>(x.rows());
}

double cross_entropy_grad(const Classifier& clf, const Matrix& x,
                          std::span<const std::size_t> labels, GradTape& tape) {
  const std::vector<std::size_t> slots = slots_for(clf, labels);
  MlpTrace trace;
  Matrix probs = clf.net().forward(x, trace);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const double loss = softmax_nll(probs, slots) * inv_n;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    probs(r, slots[r]) -= 1.0;
    for (double& v : probs.row(r)) v *= inv_n;
  }
  clf.net().backward_into(trace, probs, tape, Accumulate::kNo);
  return loss;
}

ClassifierTraining train_classifier(const LabeledFeatures& data, std::vector<std::size_t> class_ids,
                                    const ClassifierConfig& config, std::uint64_t seed) {
  const std::size_t n = data.features.rows();
  if (n == 0) throw InputError("classifier: no training samples");
  if (data.labels.size() != n) throw InputError("classifier: one label per sample is required");
  if (config.batch_size == 0) throw ConfigError("classifier: batch_size must be positive");

  Rng init_rng(seed, 1);
  Rng shuffle_rng(seed, 2);
  ClassifierTraining out{Classifier::random(data.features.cols(), std::move(class_ids), init_rng), {}};
  Classifier& clf = out.classifier;
  (void)slots_for(clf, data.labels);

  std::vector<std::size_t> canonical(n);
  std::iota(canonical.begin(), canonical.end(), 0);
  std::sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    if (data.labels[a] != data.labels[b]) return data.labels[a] < data.labels[b];
    const auto ra = data.features.row(a);
    const auto rb = data.features.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  GradTape tape = clf.net().make_tape();
  std::vector<ParamSlot> slots;
  clf.net().append_slots(tape, slots);
  Adam adam(AdamOptions{.lr = config.lr});

  std::vector<std::size_t> order = canonical;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order = canonical;
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      batch_labels.clear();
      for (std::size_t i : idx) batch_labels.push_back(data.labels[i]);
      const double loss = cross_entropy_grad(clf, gather_rows(data.features, idx), batch_labels, tape);
      epoch_loss += loss * static_cast<double>(idx.size());
      adam.step(slots);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("classifier training diverged at epoch " + std::to_string(epoch));
    }
    out.history.push_back(epoch_loss);
  }
  return out;
}

ClassifierTraining train_classifier(const LabeledFeatures& real_seen,
                                    const LabeledFeatures& synth_unseen, std::size_t num_classes,
                                    const ClassifierConfig& config, std::uint64_t seed) {
  if (real_seen.features.rows() == 0) throw InputError("classifier: no real seen samples");
  if (synth_unseen.features.rows() == 0) throw InputError("classifier: no synthetic unseen samples");
  if (real_seen.features.cols() != synth_unseen.features.cols()) {
    throw ConfigError("classifier: real and synthetic features differ in dimension");
  }
  LabeledFeatures all;
  all.features = Matrix(real_seen.features.rows() + synth_unseen.features.rows(),
                        real_seen.features.cols());
  std::copy(real_seen.features.values().begin(), real_seen.features.values().end(),
            all.features.values().begin());
  std::copy(synth_unseen.features.values().begin(), synth_unseen.features.values().end(),
            all.features.values().begin() + static_cast<std::ptrdiff_t>(real_seen.features.size()));
  all.labels = real_seen.labels;
  all.labels.insert(all.labels.end(), synth_unseen.labels.begin(), synth_unseen.labels.end());
  std::vector<std::size_t> ids(num_classes);
  std::iota(ids.begin(), ids.end(), 0);
  return train_classifier(all, std::move(ids), config, seed);
}

PerClassAccuracy per_class_accuracy(std::span<const std::size_t> predictions,
                                    std::span<const std::size_t> labels,
                                    std::span<const std::size_t> class_set) {
  if (predictions.size() != labels.size()) {
    throw InputError("accuracy: predictions and labels differ in length");
  }
  PerClassAccuracy out;
  if (class_set.empty()) return out;
  double sum = 0.0;
  for (std::size_t c : class_set) {
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != c) continue;
      ++total;
      if (predictions[i] == c) ++hits;
    }
    if (total == 0) throw InputError("accuracy: class " + std::to_string(c) + " has no test sample");
    const double acc = static_cast<double>(hits) / static_cast<double>(total);
    out.per_class.push_back({c, acc});
    sum += acc;
  }
  out.mean = sum / static_cast<double>(class_set.size());
  return out;
}

PerClassAccuracy per_class_accuracy(const Classifier& clf, const Matrix& features,
                                    std::span<const std::size_t> labels,
                                    std::span<const std::size_t> class_set) {
  return per_class_accuracy(clf.predict(features), labels, class_set);
}

double harmonic_mean(double acc_seen, double acc_unseen) {
  const double denom = acc_seen + acc_unseen;
  if (denom <= 0.0) return 0.0;
  return 2.0 * acc_seen * acc_unseen / denom;
}

}  // namespace zsflow
