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

#include "zsflow/semantics/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

namespace {

Matrix offsets(const Matrix& attributes, const Vector& anchor) {
  Matrix out = attributes;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= anchor[j];
  }
  return out;
}

Vector row_copy(const Matrix& m, std::size_t r) { return {m.row(r).begin(), m.row(r).end()}; }

}  // namespace

SemanticGraph build_graph(const Matrix& seen_attributes) {
  const std::size_t n = seen_attributes.rows();
  if (n < 3) {
    throw ConfigError("semantic graph: need at least 3 seen classes, got " + std::to_string(n));
  }
  Vector norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = std::sqrt(squared_norm(seen_attributes.row(i)));
    if (!(norms[i] > 0.0)) {
      throw InputError("semantic graph: attribute vector of seen class " + std::to_string(i) +
                       " has zero norm");
    }
  }
  SemanticGraph g{seen_attributes, Matrix(n, n), Vector(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    g.edges(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto a = seen_attributes.row(i);
      const auto b = seen_attributes.row(j);
      const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
      const double cos = dot / (norms[i] * norms[j]);
      g.edges(i, j) = cos;
      g.edges(j, i) = cos;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += g.edges(i, j);
    g.sums[i] = acc;
  }
  return g;
}

Anchors select_anchors(const SemanticGraph& graph) {
  const Vector& d = graph.sums;
  const std::size_t n = d.size();
  if (n == 0 || graph.attributes.rows() != n) throw StateError("anchors: graph is not built");

  std::size_t hi = 0;
  std::size_t lo = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (d[i] > d[hi]) hi = i;
    if (d[i] < d[lo]) lo = i;
  }
  Vector sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double median_value = sorted[(n - 1) / 2];
  const std::size_t med = static_cast<std::size_t>(
      std::find(d.begin(), d.end(), median_value) - d.begin());

  Anchors a;
  a.max_index = hi;
  a.min_index = lo;
  a.med_index = med;
  a.max = row_copy(graph.attributes, hi);
  a.min = row_copy(graph.attributes, lo);
  a.med = row_copy(graph.attributes, med);
  return a;
}

void EmbedGrads::zero() {
  max.zero();
  min.zero();
  med.zero();
}

SemanticEmbedder SemanticEmbedder::relative(const Matrix& seen_attributes, std::size_t d_g,
                                            Rng& rng) {
  Anchors anchors = select_anchors(build_graph(seen_attributes));
  const std::size_t d_a = seen_attributes.cols();
  const std::size_t dims[] = {d_a, d_g};
  const Activation acts[] = {Activation::kReLU};
  Mlp h_max = Mlp::random(dims, acts, rng);
  Mlp h_min = Mlp::random(dims, acts, rng);
  Mlp h_med = Mlp::random(dims, acts, rng);
  return relative(std::move(anchors), std::move(h_max), std::move(h_min), std::move(h_med));
}

SemanticEmbedder SemanticEmbedder::relative(Anchors anchors, Mlp h_max, Mlp h_min, Mlp h_med) {
  const std::size_t d_a = anchors.max.size();
  const std::size_t d_g = h_max.out_dim();
  for (const Mlp* h : {&h_max, &h_min, &h_med}) {
    if (h->in_dim() != d_a || h->out_dim() != d_g) {
      throw ConfigError("embedder: h maps must all be " + std::to_string(d_a) + " -> " +
                        std::to_string(d_g));
    }
  }
  if (anchors.min.size() != d_a || anchors.med.size() != d_a) {
    throw ConfigError("embedder: anchors disagree on attribute dimension");
  }
  SemanticEmbedder e;
  e.mode_ = Mode::kRelative;
  e.d_a_ = d_a;
  e.d_g_ = d_g;
  e.anchors_ = std::move(anchors);
  e.h_max_ = std::move(h_max);
  e.h_min_ = std::move(h_min);
  e.h_med_ = std::move(h_med);
  return e;
}

SemanticEmbedder SemanticEmbedder::raw(std::size_t d_a) {
  SemanticEmbedder e;
  e.mode_ = Mode::kRaw;
  e.d_a_ = d_a;
  e.d_g_ = d_a;
  return e;
}

Matrix SemanticEmbedder::embed(const Matrix& attributes, EmbedTrace* trace) const {
  if (attributes.cols() != d_a_) {
    throw ConfigError("embedder: attributes have " + std::to_string(attributes.cols()) +
                      " columns, expected " + std::to_string(d_a_));
  }
  if (mode_ == Mode::kRaw) return attributes;
  const Matrix off_max = offsets(attributes, anchors_.max);
  const Matrix off_min = offsets(attributes, anchors_.min);
  const Matrix off_med = offsets(attributes, anchors_.med);
  Matrix out = trace ? h_max_.forward(off_max, trace->max) : h_max_.forward(off_max);
  const Matrix y_min = trace ? h_min_.forward(off_min, trace->min) : h_min_.forward(off_min);
  const Matrix y_med = trace ? h_med_.forward(off_med, trace->med) : h_med_.forward(off_med);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] += y_min.values()[i] + y_med.values()[i];
  }
  return out;
}

Vector SemanticEmbedder::embed_global(std::span<const double> attribute) const {
  const Matrix out = embed(Matrix::row_vector(attribute));
  return {out.values().begin(), out.values().end()};
}

void SemanticEmbedder::backward(const EmbedTrace& trace, const Matrix& grad_out,
                                EmbedGrads& grads) const {
  if (mode_ == Mode::kRaw) return;
  h_max_.backward_into(trace.max, grad_out, grads.max, Accumulate::kYes);
  h_min_.backward_into(trace.min, grad_out, grads.min, Accumulate::kYes);
  h_med_.backward_into(trace.med, grad_out, grads.med, Accumulate::kYes);
}

EmbedGrads SemanticEmbedder::make_grads() const {
  if (mode_ == Mode::kRaw) return {};
  return {h_max_.make_tape(), h_min_.make_tape(), h_med_.make_tape()};
}

void SemanticEmbedder::append_slots(const EmbedGrads& grads, std::vector<ParamSlot>& slots) {
  if (mode_ == Mode::kRaw) return;
  h_max_.append_slots(grads.max, slots);
  h_min_.append_slots(grads.min, slots);
  h_med_.append_slots(grads.med, slots);
}

}  // namespace zsflow
