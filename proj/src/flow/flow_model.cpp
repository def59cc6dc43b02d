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

#include "zsflow/flow/flow_model.hpp"

#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

FlowModel::FlowModel(std::vector<CouplingLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("flow: at least one coupling layer is required");
  d_v_ = layers_.front().d_v;
  d_g_ = layers_.front().d_g;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.d_v != d_v_ || layer.d_g != d_g_) {
      throw ConfigError("flow: layer " + std::to_string(l) + " disagrees on d_v/d_g");
    }
    layer.validate();
  }
}

FlowModel FlowModel::random(std::size_t d_v, std::size_t d_g, std::size_t n_layers,
                            std::size_t hidden, double s_cap, Rng& rng) {
  std::vector<CouplingLayer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers.push_back(CouplingLayer::random(d_v, d_g, hidden, s_cap, rng));
  }
  return FlowModel(std::move(layers));
}

FlowModel FlowModel::identity(std::size_t d_v, std::size_t d_g, std::size_t n_layers,
                              std::size_t hidden, double s_cap) {
  std::vector<CouplingLayer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    layers.push_back(CouplingLayer::identity(d_v, d_g, hidden, s_cap));
  }
  return FlowModel(std::move(layers));
}

std::size_t FlowModel::hidden_dim() const {
  return layers_.empty() ? 0 : layers_.front().s1.layers().front().out_dim();
}

double FlowModel::s_cap() const { return layers_.empty() ? 0.0 : layers_.front().s_cap; }

std::size_t FlowModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += l.s1.parameter_count() + l.t1.parameter_count() + l.s2.parameter_count() +
         l.t2.parameter_count();
  }
  return n;
}

double FlowModel::squared_parameter_norm() const {
  double acc = 0.0;
  for (const auto& l : layers_) {
    acc += l.s1.squared_parameter_norm() + l.t1.squared_parameter_norm() +
           l.s2.squared_parameter_norm() + l.t2.squared_parameter_norm();
  }
  return acc;
}

FlowGrads FlowGrads::like(const FlowModel& model) {
  FlowGrads grads;
  for (const auto& layer : model.layers()) grads.layers.push_back(CouplingGrads::like(layer));
  return grads;
}

void FlowGrads::zero() {
  for (auto& g : layers) g.zero();
}

FlowOutput flow_forward(const FlowModel& model, const Matrix& x, const Matrix& cond,
                        FlowTrace* trace) {
  if (x.cols() != model.d_v()) {
    throw ConfigError("flow: x has " + std::to_string(x.cols()) + " columns, expected d_v=" +
                      std::to_string(model.d_v()));
  }
  if (trace != nullptr) trace->layers.assign(model.depth(), {});
  FlowOutput out{x, Vector(x.rows(), 0.0)};
  for (std::size_t l = 0; l < model.depth(); ++l) {
    CouplingOutput step = coupling_forward(model.layers()[l], out.z, cond, l,
                                           trace ? &trace->layers[l] : nullptr);
    out.z = std::move(step.v);
    for (std::size_t r = 0; r < out.logdet.size(); ++r) out.logdet[r] += step.logdet[r];
  }
  return out;
}

Matrix flow_generate(const FlowModel& model, const Matrix& z, const Matrix& cond,
                     FlowTrace* trace) {
  if (z.cols() != model.d_v()) {
    throw ConfigError("flow: z has " + std::to_string(z.cols()) + " columns, expected d_v=" +
                      std::to_string(model.d_v()));
  }
  if (trace != nullptr) trace->layers.assign(model.depth(), {});
  Matrix x = z;
  for (std::size_t l = model.depth(); l-- > 0;) {
    x = coupling_inverse(model.layers()[l], x, cond, l, trace ? &trace->layers[l] : nullptr);
  }
  return x;
}

Matrix flow_forward_backward(const FlowModel& model, const FlowTrace& trace, const Matrix& grad_z,
                             std::span<const double> grad_logdet, FlowGrads& grads,
                             Matrix* grad_cond) {
  if (trace.layers.size() != model.depth()) throw StateError("flow: backward called before forward");
  if (grads.layers.size() != model.depth()) grads = FlowGrads::like(model);
  Matrix g = grad_z;
  for (std::size_t l = model.depth(); l-- > 0;) {
    g = coupling_forward_backward(model.layers()[l], trace.layers[l], g, grad_logdet,
                                  grads.layers[l], grad_cond);
  }
  return g;
}

Matrix flow_generate_backward(const FlowModel& model, const FlowTrace& trace,
                              const Matrix& grad_x, FlowGrads& grads, Matrix* grad_cond) {
  if (trace.layers.size() != model.depth()) {
    throw StateError("flow: backward called before generate");
  }
  if (grads.layers.size() != model.depth()) grads = FlowGrads::like(model);
  Matrix g = grad_x;
  for (std::size_t l = 0; l < model.depth(); ++l) {
    g = coupling_inverse_backward(model.layers()[l], trace.layers[l], g, grads.layers[l],
                                  grad_cond);
  }
  return g;
}

void append_slots(FlowModel& model, const FlowGrads& grads, std::vector<ParamSlot>& slots) {
  if (grads.layers.size() != model.depth()) {
    throw ConfigError("flow: gradient buffers do not mirror the model");
  }
  for (std::size_t l = 0; l < model.depth(); ++l) {
    auto& layer = model.layers()[l];
    const auto& g = grads.layers[l];
    layer.s1.append_slots(g.s1, slots);
    layer.t1.append_slots(g.t1, slots);
    layer.s2.append_slots(g.s2, slots);
    layer.t2.append_slots(g.t2, slots);
  }
}

}  // namespace zsflow
