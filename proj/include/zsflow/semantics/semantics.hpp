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
#include <vector>

#include "zsflow/numcore/mlp.hpp"

namespace zsflow {

// Cosine-similarity graph over the seen-class attribute vectors.
struct SemanticGraph {
  Matrix attributes;  // C_s x d_a
  Matrix edges;       // C_s x C_s cosine similarities
  Vector sums;        // d_i = sum_j edges(i, j), self term included
};

// Throws InputError naming the class for an all-zero row and ConfigError for
// fewer than three classes.
SemanticGraph build_graph(const Matrix& seen_attributes);

struct Anchors {
  Vector max, min, med;
  std::size_t max_index = 0;
  std::size_t min_index = 0;
  std::size_t med_index = 0;

  bool operator==(const Anchors&) const = default;
};

// Highest, lowest and (lower) median similarity sums. Ties go to the lowest
// class index, including for the median value.
Anchors select_anchors(const SemanticGraph& graph);

struct EmbedTrace {
  MlpTrace max, min, med;
};

struct EmbedGrads {
  GradTape max, min, med;
  void zero();
};

// Maps class attributes to the condition vectors fed to the flow.
//
// Relative mode: a_g = h_max(a - a_max) + h_min(a - a_min) + h_med(a - a_med),
// each h a single FC layer with ReLU, anchors fixed from the seen classes.
// Raw mode passes attributes through unchanged (the "without relative
// positioning" ablation).
class SemanticEmbedder {
 public:
  enum class Mode { kRelative, kRaw };

  SemanticEmbedder() = default;

  static SemanticEmbedder relative(const Matrix& seen_attributes, std::size_t d_g, Rng& rng);
  static SemanticEmbedder relative(Anchors anchors, Mlp h_max, Mlp h_min, Mlp h_med);
  static SemanticEmbedder raw(std::size_t d_a);

  Mode mode() const noexcept { return mode_; }
  std::size_t in_dim() const noexcept { return d_a_; }
  std::size_t out_dim() const noexcept { return d_g_; }
  const Anchors& anchors() const noexcept { return anchors_; }
  const Mlp& h_max() const noexcept { return h_max_; }
  const Mlp& h_min() const noexcept { return h_min_; }
  const Mlp& h_med() const noexcept { return h_med_; }
  Mlp& h_max() noexcept { return h_max_; }
  Mlp& h_min() noexcept { return h_min_; }
  Mlp& h_med() noexcept { return h_med_; }

  // One row per class.
  Matrix embed(const Matrix& attributes, EmbedTrace* trace = nullptr) const;
  Vector embed_global(std::span<const double> attribute) const;

  // Accumulates h-map parameter gradients for a traced embed call.
  void backward(const EmbedTrace& trace, const Matrix& grad_out, EmbedGrads& grads) const;

  EmbedGrads make_grads() const;
  void append_slots(const EmbedGrads& grads, std::vector<ParamSlot>& slots);

  bool operator==(const SemanticEmbedder&) const = default;

 private:
  Mode mode_ = Mode::kRaw;
  std::size_t d_a_ = 0;
  std::size_t d_g_ = 0;
  Anchors anchors_;
  Mlp h_max_, h_min_, h_med_;
};

}  // namespace zsflow
