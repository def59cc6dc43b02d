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

#include "zsflow/numcore/mlp.hpp"

namespace zsflow {

// Conditional affine coupling layer. The input u is split into u1 (first
// ceil(d_v/2) coordinates) and u2 (the rest); the condition c is concatenated
// to whichever half drives the scale and shift nets:
//
//   v1 = u1 * exp(S1) + t1([u2, c]),  S1 = clamp(s1([u2, c]))
//   v2 = u2 * exp(S2) + t2([v1, c]),  S2 = clamp(s2([v1, c]))
//
// clamp(s) = s_cap * tanh(s / s_cap) when s_cap > 0 and the identity otherwise.
// log|det J| = sum(S1) + sum(S2) per row.
struct CouplingLayer {
  Mlp s1, t1;  // [u2, c] -> u1-sized
  Mlp s2, t2;  // [v1, c] -> u2-sized
  std::size_t d_v = 0;
  std::size_t d_g = 0;
  double s_cap = 5.0;

  std::size_t first_half() const noexcept { return (d_v + 1) / 2; }
  std::size_t second_half() const noexcept { return d_v / 2; }

  // Internal nets are in -> hidden (LeakyReLU) -> out (identity). Output
  // layers are initialised at a tenth of the usual scale.
  static CouplingLayer random(std::size_t d_v, std::size_t d_g, std::size_t hidden, double s_cap,
                              Rng& rng);
  // All weights zero: the identity map with zero log-determinant.
  static CouplingLayer identity(std::size_t d_v, std::size_t d_g, std::size_t hidden,
                                double s_cap);

  // Throws ConfigError if the four nets do not fit d_v / d_g.
  void validate() const;

  bool operator==(const CouplingLayer&) const = default;
};

// Everything the backward passes need from one application of a layer.
struct CouplingTrace {
  Matrix u1, u2, v1, v2;
  Matrix s1, s2;          // clamped scales
  Matrix s1_slope, s2_slope;  // d clamp / d raw
  MlpTrace s1_net, t1_net, s2_net, t2_net;
};

struct CouplingGrads {
  GradTape s1, t1, s2, t2;

  static CouplingGrads like(const CouplingLayer& layer);
  void zero();
};

struct CouplingOutput {
  Matrix v;
  Vector logdet;  // one entry per row
};

// `layer_index` only labels divergence errors.
CouplingOutput coupling_forward(const CouplingLayer& layer, const Matrix& u, const Matrix& cond,
                                std::size_t layer_index = 0, CouplingTrace* trace = nullptr);

Matrix coupling_inverse(const CouplingLayer& layer, const Matrix& v, const Matrix& cond,
                        std::size_t layer_index = 0, CouplingTrace* trace = nullptr);

// Given d(loss)/dv and d(loss)/dlogdet for a traced forward call, accumulates
// parameter gradients into `grads`, returns d(loss)/du and adds d(loss)/dcond
// into `grad_cond` (when non-null).
Matrix coupling_forward_backward(const CouplingLayer& layer, const CouplingTrace& trace,
                                 const Matrix& grad_v, std::span<const double> grad_logdet,
                                 CouplingGrads& grads, Matrix* grad_cond);

// Same for a traced inverse call: takes d(loss)/du, returns d(loss)/dv.
Matrix coupling_inverse_backward(const CouplingLayer& layer, const CouplingTrace& trace,
                                 const Matrix& grad_u, CouplingGrads& grads, Matrix* grad_cond);

}  // namespace zsflow
