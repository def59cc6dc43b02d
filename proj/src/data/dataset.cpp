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

#include "zsflow/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zsflow/errors.hpp"
#include "zsflow/numcore/rng.hpp"

namespace zsflow {

namespace {

enum : std::uint64_t {
  kStreamAttributes = 1,
  kStreamMap = 2,
  kStreamMeanNoise = 3,
  kStreamSamples = 4,
  kStreamSplit = 5,
};

Matrix synth_attributes(const SynthConfig& config) {
  Rng rng(config.seed, kStreamAttributes);
  Matrix attrs(config.num_seen + config.num_unseen, config.d_a);
  for (double& a : attrs.values()) a = rng.uniform(0.0, config.attr_scale);
  return attrs;
}

Matrix attribute_rows(const Matrix& attributes, std::span<const std::size_t> classes) {
  return gather_rows(attributes, classes);
}

}  // namespace

Matrix Dataset::seen_attributes() const { return attribute_rows(attributes, seen_classes); }
Matrix Dataset::unseen_attributes() const { return attribute_rows(attributes, unseen_classes); }

void Dataset::validate() const {
  const std::size_t n = features.rows();
  const std::size_t n_cls = attributes.rows();
  if (labels.size() != n) {
    throw InputError("dataset: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " feature rows");
  }
  if (!all_finite(features.values())) throw InputError("dataset: non-finite feature value");
  if (!all_finite(attributes.values())) throw InputError("dataset: non-finite attribute value");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= n_cls) {
      throw InputError("dataset: sample " + std::to_string(i) + " references class " +
                       std::to_string(labels[i]) + " but only " + std::to_string(n_cls) +
                       " classes have attributes");
    }
  }

  std::vector<int> role(n_cls, 0);  // 1 seen, 2 unseen
  auto mark_classes = [&](const std::vector<std::size_t>& classes, int tag, const char* name) {
    for (std::size_t c : classes) {
      if (c >= n_cls) {
        throw InputError(std::string("dataset: ") + name + " class " + std::to_string(c) +
                         " has no attribute row");
      }
      if (role[c] != 0) {
        throw InputError("dataset: class " + std::to_string(c) +
                         " is listed twice across seen/unseen");
      }
      role[c] = tag;
    }
  };
  mark_classes(seen_classes, 1, "seen");
  mark_classes(unseen_classes, 2, "unseen");

  std::vector<int> used(n, 0);
  auto mark_samples = [&](const std::vector<std::size_t>& idx, int want_role, const char* name) {
    for (std::size_t i : idx) {
      if (i >= n) {
        throw InputError(std::string("dataset: ") + name + " index " + std::to_string(i) +
                         " is out of range");
      }
      if (used[i] != 0) {
        throw InputError("dataset: sample " + std::to_string(i) + " appears in more than one split" +
                         " list (" + name + ")");
      }
      used[i] = 1;
      if (role[labels[i]] != want_role) {
        throw InputError(std::string("dataset: ") + name + " sample " + std::to_string(i) +
                         " has class " + std::to_string(labels[i]) + " outside its class set");
      }
    }
  };
  mark_samples(split.train_seen, 1, "train_seen");
  mark_samples(split.test_seen, 1, "test_seen");
  mark_samples(split.test_unseen, 2, "test_unseen");
}

void SynthConfig::validate() const {
  if (num_seen < 3) throw ConfigError("synth: C_s must be at least 3");
  if (num_unseen < 1) throw ConfigError("synth: C_u must be at least 1");
  if (d_v < 2) throw ConfigError("synth: d_v must be at least 2");
  if (d_a < 1) throw ConfigError("synth: d_a must be at least 1");
  if (samples_per_class < 1) throw ConfigError("synth: samples_per_class must be at least 1");
  if (!(attr_scale > 0.0)) throw ConfigError("synth: attr_scale must be positive");
  if (!(map_noise >= 0.0)) throw ConfigError("synth: map_noise must be non-negative");
  if (!(within_class_std >= 0.0)) throw ConfigError("synth: within_class_std must be non-negative");
}

Matrix synthetic_class_means(const SynthConfig& config) {
  config.validate();
  const Matrix attrs = synth_attributes(config);

  Rng map_rng(config.seed, kStreamMap);
  Matrix map(config.d_v, config.d_a);
  const double map_std = 1.0 / std::sqrt(static_cast<double>(config.d_a));
  for (double& w : map.values()) w = map_std * map_rng.normal();

  Matrix means = matmul_transposed(attrs, map);
  Rng noise_rng(config.seed, kStreamMeanNoise);
  for (double& m : means.values()) m += config.map_noise * noise_rng.normal();
  return means;
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t n_cls = config.num_seen + config.num_unseen;
  const std::size_t per = config.samples_per_class;

  Dataset ds;
  ds.attributes = synth_attributes(config);
  const Matrix means = synthetic_class_means(config);

  ds.features = Matrix(n_cls * per, config.d_v);
  ds.labels.resize(n_cls * per);
  Rng sample_rng(config.seed, kStreamSamples);
  for (std::size_t c = 0; c < n_cls; ++c) {
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t i = c * per + k;
      ds.labels[i] = c;
      auto row = ds.features.row(i);
      for (std::size_t j = 0; j < config.d_v; ++j) {
        row[j] = means(c, j) + config.within_class_std * sample_rng.normal();
      }
    }
  }

  for (std::size_t c = 0; c < config.num_seen; ++c) ds.seen_classes.push_back(c);
  for (std::size_t c = config.num_seen; c < n_cls; ++c) ds.unseen_classes.push_back(c);

  Rng split_rng(config.seed, kStreamSplit);
  const std::size_t n_train = (4 * per + 4) / 5;
  for (std::size_t c : ds.seen_classes) {
    std::vector<std::size_t> idx(per);
    for (std::size_t k = 0; k < per; ++k) idx[k] = c * per + k;
    shuffle(idx, split_rng);
    ds.split.train_seen.insert(ds.split.train_seen.end(), idx.begin(), idx.begin() + n_train);
    ds.split.test_seen.insert(ds.split.test_seen.end(), idx.begin() + n_train, idx.end());
  }
  for (std::size_t c : ds.unseen_classes) {
    for (std::size_t k = 0; k < per; ++k) ds.split.test_unseen.push_back(c * per + k);
  }
  std::sort(ds.split.train_seen.begin(), ds.split.train_seen.end());
  std::sort(ds.split.test_seen.begin(), ds.split.test_seen.end());
  return ds;
}

Matrix class_prototypes(const Matrix& features, std::span<const std::size_t> labels,
                        std::span<const std::size_t> over, std::span<const std::size_t> classes) {
  std::vector<std::size_t> slot_of;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] >= slot_of.size()) slot_of.resize(classes[k] + 1, classes.size());
    slot_of[classes[k]] = k;
  }
  Matrix protos(classes.size(), features.cols());
  std::vector<std::size_t> counts(classes.size(), 0);
  for (std::size_t i : over) {
    if (i >= features.rows()) throw InputError("prototypes: sample index out of range");
    const std::size_t y = labels[i];
    if (y >= slot_of.size() || slot_of[y] == classes.size()) continue;
    const std::size_t k = slot_of[y];
    ++counts[k];
    auto dst = protos.row(k);
    const auto src = features.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (counts[k] == 0) {
      throw InputError("prototypes: class " + std::to_string(classes[k]) + " has no samples");
    }
    const auto n = static_cast<double>(counts[k]);
    for (double& v : protos.row(k)) v /= n;
  }
  return protos;
}

Matrix class_prototypes(const Dataset& ds, std::span<const std::size_t> over) {
  return class_prototypes(ds.features, ds.labels, over, ds.seen_classes);
}

}  // namespace zsflow
