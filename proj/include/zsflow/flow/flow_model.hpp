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

#include "zsflow/flow/coupling.hpp"

namespace zsflow {

// f = f_1 o f_2 o ... o f_L over conditional coupling layers, with a standard
// normal prior on z. x -> z is inference, z -> x is generation.
class FlowModel {
 public:
  FlowModel() = default;
  // Throws ConfigError on empty or inconsistent layers.
  explicit FlowModel(std::vector<CouplingLayer> layers);

  static FlowModel random(std::size_t d_v, std::size_t d_g, std::size_t n_layers,
                          std::size_t hidden, double s_cap, Rng& rng);
  static FlowModel identity(std::size_t d_v, std::size_t d_g, std::size_t n_layers,
                            std::size_t hidden, double s_cap);

  std::size_t d_v() const noexcept { return d_v_; }
  std::size_t d_g() const noexcept { return d_g_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t hidden_dim() const;
  double s_cap() const;

  const std::vector<CouplingLayer>& layers() const noexcept { return layers_; }
  std::vector<CouplingLayer>& layers() noexcept { return layers_; }

  std::size_t parameter_count() const;
  double squared_parameter_norm() const;

  bool operator==(const FlowModel&) const = default;

 private:
  std::vector<CouplingLayer> layers_;
  std::size_t d_v_ = 0;
  std::size_t d_g_ = 0;
};

struct FlowOutput {
  Matrix z;
  Vector logdet;
};

// Per-layer gradient buffers for a whole flow.
struct FlowGrads {
  std::vector<CouplingGrads> layers;

  static FlowGrads like(const FlowModel& model);
  void zero();
};

struct FlowTrace {
  std::vector<CouplingTrace> layers;
};

FlowOutput flow_forward(const FlowModel& model, const Matrix& x, const Matrix& cond,
                        FlowTrace* trace = nullptr);

// Layers applied in reverse order through their inverses.
Matrix flow_generate(const FlowModel& model, const Matrix& z, const Matrix& cond,
                     FlowTrace* trace = nullptr);

// Backward through a traced flow_forward. Returns d(loss)/dx.
Matrix flow_forward_backward(const FlowModel& model, const FlowTrace& trace, const Matrix& grad_z,
                             std::span<const double> grad_logdet, FlowGrads& grads,
                             Matrix* grad_cond);

// Backward through a traced flow_generate. Returns d(loss)/dz.
Matrix flow_generate_backward(const FlowModel& model, const FlowTrace& trace,
                              const Matrix& grad_x, FlowGrads& grads, Matrix* grad_cond);

// Optimizer slots for every flow parameter, paired with `grads`.
void append_slots(FlowModel& model, const FlowGrads& grads, std::vector<ParamSlot>& slots);

}  // namespace zsflow
