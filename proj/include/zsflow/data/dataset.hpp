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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zsflow/numcore/matrix.hpp"

namespace zsflow {

struct Split {
  std::vector<std::size_t> train_seen;
  std::vector<std::size_t> test_seen;
  std::vector<std::size_t> test_unseen;

  bool operator==(const Split&) const = default;
};

// Features, labels and class attributes with a seen/unseen partition. Labels
// are class ids, i.e. row indices into `attributes`.
struct Dataset {
  Matrix features;                  // N x d_v
  std::vector<std::size_t> labels;  // N
  Matrix attributes;                // (C_s + C_u) x d_a
  std::vector<std::size_t> seen_classes;
  std::vector<std::size_t> unseen_classes;
  Split split;

  std::size_t num_classes() const noexcept { return attributes.rows(); }
  std::size_t d_v() const noexcept { return features.cols(); }
  std::size_t d_a() const noexcept { return attributes.cols(); }

  // Attribute rows of the seen (resp. unseen) classes, in class-list order.
  Matrix seen_attributes() const;
  Matrix unseen_attributes() const;

  // Throws InputError on any broken invariant: overlapping class sets,
  // labels outside their split's class set, an index in two split lists,
  // out-of-range labels or non-finite values.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

struct SynthConfig {
  std::size_t num_seen = 10;
  std::size_t num_unseen = 5;
  std::size_t d_v = 32;
  std::size_t d_a = 16;
  std::size_t samples_per_class = 100;
  double attr_scale = 1.0;
  double map_noise = 0.1;
  double within_class_std = 0.2;
  std::uint64_t seed = 7;

  void validate() const;
};

// Attributes a_c ~ U(0, attr_scale)^d_a, a shared linear map W (entries
// N(0, 1/d_a)), class means W a_c + map_noise * xi_c, samples around the means
// with isotropic spread within_class_std. Classes [0, C_s) are seen. Each seen
// class puts ceil(0.8 n) samples in train_seen and the rest in test_seen; all
// unseen samples go to test_unseen.
Dataset generate_synthetic(const SynthConfig& config);

// The noise-free class means used by generate_synthetic (one row per class).
Matrix synthetic_class_means(const SynthConfig& config);

// Mean feature of each class in `classes`, computed over the samples `over`.
// Throws InputError when a class has no sample.
Matrix class_prototypes(const Matrix& features, std::span<const std::size_t> labels,
                        std::span<const std::size_t> over, std::span<const std::size_t> classes);
Matrix class_prototypes(const Dataset& ds, std::span<const std::size_t> over);

// features.csv + attributes.csv + split.json in `dir`. Throws IoError.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// `features_path` may be CSV or the binary ZSF1 format (detected by magic).
Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& attributes_path,
                     const std::filesystem::path& split_path);
Dataset load_dataset(const std::filesystem::path& dir);

// Labeled feature table, the shape of features.csv.
struct LabeledFeatures {
  Matrix features;
  std::vector<std::size_t> labels;
};

void write_features_csv(const std::filesystem::path& path, const Matrix& features,
                        std::span<const std::size_t> labels, std::size_t d_v);
LabeledFeatures read_features_csv(const std::filesystem::path& path);

// "ZSF1" | u64 rows | u64 d_v | rows x u64 labels | rows x d_v f64, little-endian.
void write_features_binary(const std::filesystem::path& path, const LabeledFeatures& table);
LabeledFeatures read_features_binary(const std::filesystem::path& path);

void write_attributes_csv(const std::filesystem::path& path, const Matrix& attributes);
Matrix read_attributes_csv(const std::filesystem::path& path);

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace zsflow
