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

#include "zsflow/flow/coupling.hpp"

#include <cmath>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

namespace {

// Beyond this magnitude exp() of a log-scale is treated as divergence.
constexpr double kMaxLogScale = 80.0;

// Multiplier on the output-layer parameters of freshly initialised s/t nets.
constexpr double kOutputInitScale = 0.1;

struct Scale {
  Matrix value;
  Matrix slope;
};

Scale clamp_scale(const Matrix& raw, double s_cap, std::size_t layer_index, const char* net) {
  Scale out{Matrix(raw.rows(), raw.cols()), Matrix(raw.rows(), raw.cols(), 1.0)};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double r = raw.values()[i];
    double s = r;
    if (s_cap > 0.0) {
      const double th = std::tanh(r / s_cap);
      s = s_cap * th;
      out.slope.values()[i] = 1.0 - th * th;
    }
    if (!std::isfinite(s) || std::abs(s) > kMaxLogScale) {
      throw DivergenceError("coupling layer " + std::to_string(layer_index) + ": " + net +
                            " produced log-scale " + std::to_string(s));
    }
    out.value.values()[i] = s;
  }
  return out;
}

void check_finite(const Matrix& m, std::size_t layer_index, const char* what) {
  if (!all_finite(m.values())) {
    throw DivergenceError("coupling layer " + std::to_string(layer_index) + ": non-finite " +
                          what);
  }
}

void check_inputs(const CouplingLayer& layer, const Matrix& u, const Matrix& cond) {
  if (u.cols() != layer.d_v) {
    throw ConfigError("coupling: input has " + std::to_string(u.cols()) + " columns, expected d_v=" +
                      std::to_string(layer.d_v));
  }
  if (cond.cols() != layer.d_g) {
    throw ConfigError("coupling: condition has " + std::to_string(cond.cols()) +
                      " columns, expected d_g=" + std::to_string(layer.d_g));
  }
  if (u.rows() != cond.rows()) throw ConfigError("coupling: input and condition row counts differ");
}

// Adds columns [0, head) of `grad_in` into `head_grad` and the rest into `cond_grad`.
void split_input_grad(const Matrix& grad_in, Matrix& head_grad, Matrix* cond_grad) {
  const std::size_t head = head_grad.cols();
  for (std::size_t r = 0; r < grad_in.rows(); ++r) {
    const auto g = grad_in.row(r);
    auto h = head_grad.row(r);
    for (std::size_t j = 0; j < head; ++j) h[j] += g[j];
    if (cond_grad != nullptr) {
      auto c = cond_grad->row(r);
      for (std::size_t j = head; j < g.size(); ++j) c[j - head] += g[j];
    }
  }
}

}  // namespace

CouplingLayer CouplingLayer::random(std::size_t d_v, std::size_t d_g, std::size_t hidden,
                                    double s_cap, Rng& rng) {
  if (d_v < 2) throw ConfigError("coupling: d_v must be at least 2");
  CouplingLayer layer;
  layer.d_v = d_v;
  layer.d_g = d_g;
  layer.s_cap = s_cap;
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  layer.s1 = make_two_layer(n2 + d_g, hidden, n1, Activation::kLeakyReLU, Activation::kIdentity, rng);
  layer.t1 = make_two_layer(n2 + d_g, hidden, n1, Activation::kLeakyReLU, Activation::kIdentity, rng);
  layer.s2 = make_two_layer(n1 + d_g, hidden, n2, Activation::kLeakyReLU, Activation::kIdentity, rng);
  layer.t2 = make_two_layer(n1 + d_g, hidden, n2, Activation::kLeakyReLU, Activation::kIdentity, rng);
  // Output layers start small so every layer begins close to the identity map.
  for (Mlp* net : {&layer.s1, &layer.t1, &layer.s2, &layer.t2}) {
    Dense& out = net->layers().back();
    for (double& w : out.weight.values()) w *= kOutputInitScale;
    for (double& b : out.bias) b *= kOutputInitScale;
  }
  return layer;
}

CouplingLayer CouplingLayer::identity(std::size_t d_v, std::size_t d_g, std::size_t hidden,
                                      double s_cap) {
  if (d_v < 2) throw ConfigError("coupling: d_v must be at least 2");
  CouplingLayer layer;
  layer.d_v = d_v;
  layer.d_g = d_g;
  layer.s_cap = s_cap;
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  const Activation acts[] = {Activation::kLeakyReLU, Activation::kIdentity};
  const std::size_t dims1[] = {n2 + d_g, hidden, n1};
  const std::size_t dims2[] = {n1 + d_g, hidden, n2};
  layer.s1 = Mlp::zeros(dims1, acts);
  layer.t1 = Mlp::zeros(dims1, acts);
  layer.s2 = Mlp::zeros(dims2, acts);
  layer.t2 = Mlp::zeros(dims2, acts);
  return layer;
}

void CouplingLayer::validate() const {
  const std::size_t n1 = first_half();
  const std::size_t n2 = second_half();
  auto check = [](const Mlp& net, std::size_t in, std::size_t out, const char* name) {
    if (net.in_dim() != in || net.out_dim() != out) {
      throw ConfigError(std::string("coupling: net ") + name + " maps " +
                        std::to_string(net.in_dim()) + "->" + std::to_string(net.out_dim()) +
                        ", expected " + std::to_string(in) + "->" + std::to_string(out));
    }
  };
  check(s1, n2 + d_g, n1, "s1");
  check(t1, n2 + d_g, n1, "t1");
  check(s2, n1 + d_g, n2, "s2");
  check(t2, n1 + d_g, n2, "t2");
}

CouplingGrads CouplingGrads::like(const CouplingLayer& layer) {
  return {layer.s1.make_tape(), layer.t1.make_tape(), layer.s2.make_tape(), layer.t2.make_tape()};
}

void CouplingGrads::zero() {
  s1.zero();
  t1.zero();
  s2.zero();
  t2.zero();
}

CouplingOutput coupling_forward(const CouplingLayer& layer, const Matrix& u, const Matrix& cond,
                                std::size_t layer_index, CouplingTrace* trace) {
  check_inputs(layer, u, cond);
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  const std::size_t rows = u.rows();

  Matrix u1 = slice_cols(u, 0, n1);
  Matrix u2 = slice_cols(u, n1, n2);

  const Matrix in1 = hconcat(u2, cond);
  MlpTrace s1_trace, t1_trace;
  Scale sc1 = clamp_scale(trace ? layer.s1.forward(in1, s1_trace) : layer.s1.forward(in1),
                          layer.s_cap, layer_index, "s1");
  const Matrix sh1 = trace ? layer.t1.forward(in1, t1_trace) : layer.t1.forward(in1);
  Matrix v1(rows, n1);
  for (std::size_t i = 0; i < v1.size(); ++i) {
    v1.values()[i] = u1.values()[i] * std::exp(sc1.value.values()[i]) + sh1.values()[i];
  }

  const Matrix in2 = hconcat(v1, cond);
  MlpTrace s2_trace, t2_trace;
  Scale sc2 = clamp_scale(trace ? layer.s2.forward(in2, s2_trace) : layer.s2.forward(in2),
                          layer.s_cap, layer_index, "s2");
  const Matrix sh2 = trace ? layer.t2.forward(in2, t2_trace) : layer.t2.forward(in2);
  Matrix v2(rows, n2);
  for (std::size_t i = 0; i < v2.size(); ++i) {
    v2.values()[i] = u2.values()[i] * std::exp(sc2.value.values()[i]) + sh2.values()[i];
  }

  CouplingOutput out{hconcat(v1, v2), Vector(rows, 0.0)};
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (double s : sc1.value.row(r)) acc += s;
    for (double s : sc2.value.row(r)) acc += s;
    out.logdet[r] = acc;
  }
  check_finite(out.v, layer_index, "forward output");

  if (trace != nullptr) {
    trace->u1 = std::move(u1);
    trace->u2 = std::move(u2);
    trace->v1 = std::move(v1);
    trace->v2 = std::move(v2);
    trace->s1 = std::move(sc1.value);
    trace->s2 = std::move(sc2.value);
    trace->s1_slope = std::move(sc1.slope);
    trace->s2_slope = std::move(sc2.slope);
    trace->s1_net = std::move(s1_trace);
    trace->t1_net = std::move(t1_trace);
    trace->s2_net = std::move(s2_trace);
    trace->t2_net = std::move(t2_trace);
  }
  return out;
}

Matrix coupling_inverse(const CouplingLayer& layer, const Matrix& v, const Matrix& cond,
                        std::size_t layer_index, CouplingTrace* trace) {
  check_inputs(layer, v, cond);
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  const std::size_t rows = v.rows();

  Matrix v1 = slice_cols(v, 0, n1);
  Matrix v2 = slice_cols(v, n1, n2);

  const Matrix in2 = hconcat(v1, cond);
  MlpTrace s2_trace, t2_trace;
  Scale sc2 = clamp_scale(trace ? layer.s2.forward(in2, s2_trace) : layer.s2.forward(in2),
                          layer.s_cap, layer_index, "s2");
  const Matrix sh2 = trace ? layer.t2.forward(in2, t2_trace) : layer.t2.forward(in2);
  Matrix u2(rows, n2);
  for (std::size_t i = 0; i < u2.size(); ++i) {
    u2.values()[i] = (v2.values()[i] - sh2.values()[i]) * std::exp(-sc2.value.values()[i]);
  }

  const Matrix in1 = hconcat(u2, cond);
  MlpTrace s1_trace, t1_trace;
  Scale sc1 = clamp_scale(trace ? layer.s1.forward(in1, s1_trace) : layer.s1.forward(in1),
                          layer.s_cap, layer_index, "s1");
  const Matrix sh1 = trace ? layer.t1.forward(in1, t1_trace) : layer.t1.forward(in1);
  Matrix u1(rows, n1);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    u1.values()[i] = (v1.values()[i] - sh1.values()[i]) * std::exp(-sc1.value.values()[i]);
  }

  Matrix u = hconcat(u1, u2);
  check_finite(u, layer_index, "inverse output");

  if (trace != nullptr) {
    trace->u1 = std::move(u1);
    trace->u2 = std::move(u2);
    trace->v1 = std::move(v1);
    trace->v2 = std::move(v2);
    trace->s1 = std::move(sc1.value);
    trace->s2 = std::move(sc2.value);
    trace->s1_slope = std::move(sc1.slope);
    trace->s2_slope = std::move(sc2.slope);
    trace->s1_net = std::move(s1_trace);
    trace->t1_net = std::move(t1_trace);
    trace->s2_net = std::move(s2_trace);
    trace->t2_net = std::move(t2_trace);
  }
  return u;
}

Matrix coupling_forward_backward(const CouplingLayer& layer, const CouplingTrace& trace,
                                 const Matrix& grad_v, std::span<const double> grad_logdet,
                                 CouplingGrads& grads, Matrix* grad_cond) {
  if (trace.s1_net.empty()) throw StateError("coupling: backward called before forward");
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  const std::size_t rows = grad_v.rows();
  if (grad_v.cols() != layer.d_v || grad_logdet.size() != rows || trace.u1.rows() != rows) {
    throw ConfigError("coupling: gradient shapes do not match the traced forward pass");
  }

  Matrix g_v1 = slice_cols(grad_v, 0, n1);
  const Matrix g_v2 = slice_cols(grad_v, n1, n2);

  // v2 = u2 * exp(S2) + T2 with S2, T2 functions of [v1, c].
  Matrix g_u2(rows, n2);
  Matrix g_s2(rows, n2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double e = std::exp(trace.s2(r, j));
      const double g = g_v2(r, j);
      g_u2(r, j) = g * e;
      g_s2(r, j) = (g * trace.u2(r, j) * e + grad_logdet[r]) * trace.s2_slope(r, j);
    }
  }
  layer.s2.backward_into(trace.s2_net, g_s2, grads.s2, Accumulate::kYes);
  split_input_grad(grads.s2.input, g_v1, grad_cond);
  layer.t2.backward_into(trace.t2_net, g_v2, grads.t2, Accumulate::kYes);
  split_input_grad(grads.t2.input, g_v1, grad_cond);

  // v1 = u1 * exp(S1) + T1 with S1, T1 functions of [u2, c].
  Matrix g_u1(rows, n1);
  Matrix g_s1(rows, n1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double e = std::exp(trace.s1(r, j));
      const double g = g_v1(r, j);
      g_u1(r, j) = g * e;
      g_s1(r, j) = (g * trace.u1(r, j) * e + grad_logdet[r]) * trace.s1_slope(r, j);
    }
  }
  layer.s1.backward_into(trace.s1_net, g_s1, grads.s1, Accumulate::kYes);
  split_input_grad(grads.s1.input, g_u2, grad_cond);
  layer.t1.backward_into(trace.t1_net, g_v1, grads.t1, Accumulate::kYes);
  split_input_grad(grads.t1.input, g_u2, grad_cond);

  return hconcat(g_u1, g_u2);
}

Matrix coupling_inverse_backward(const CouplingLayer& layer, const CouplingTrace& trace,
                                 const Matrix& grad_u, CouplingGrads& grads, Matrix* grad_cond) {
  if (trace.s1_net.empty()) throw StateError("coupling: backward called before inverse");
  const std::size_t n1 = layer.first_half();
  const std::size_t n2 = layer.second_half();
  const std::size_t rows = grad_u.rows();
  if (grad_u.cols() != layer.d_v || trace.u1.rows() != rows) {
    throw ConfigError("coupling: gradient shapes do not match the traced inverse pass");
  }

  const Matrix g_u1 = slice_cols(grad_u, 0, n1);
  Matrix g_u2 = slice_cols(grad_u, n1, n2);

  // u1 = (v1 - T1) * exp(-S1) with S1, T1 functions of [u2, c].
  Matrix g_v1(rows, n1);
  Matrix g_t1(rows, n1);
  Matrix g_s1(rows, n1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double ie = std::exp(-trace.s1(r, j));
      const double g = g_u1(r, j);
      g_v1(r, j) = g * ie;
      g_t1(r, j) = -g * ie;
      g_s1(r, j) = -g * trace.u1(r, j) * trace.s1_slope(r, j);
    }
  }
  layer.s1.backward_into(trace.s1_net, g_s1, grads.s1, Accumulate::kYes);
  split_input_grad(grads.s1.input, g_u2, grad_cond);
  layer.t1.backward_into(trace.t1_net, g_t1, grads.t1, Accumulate::kYes);
  split_input_grad(grads.t1.input, g_u2, grad_cond);

  // u2 = (v2 - T2) * exp(-S2) with S2, T2 functions of [v1, c].
  Matrix g_v2(rows, n2);
  Matrix g_t2(rows, n2);
  Matrix g_s2(rows, n2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double ie = std::exp(-trace.s2(r, j));
      const double g = g_u2(r, j);
      g_v2(r, j) = g * ie;
      g_t2(r, j) = -g * ie;
      g_s2(r, j) = -g * trace.u2(r, j) * trace.s2_slope(r, j);
    }
  }
  layer.s2.backward_into(trace.s2_net, g_s2, grads.s2, Accumulate::kYes);
  split_input_grad(grads.s2.input, g_v1, grad_cond);
  layer.t2.backward_into(trace.t2_net, g_t2, grads.t2, Accumulate::kYes);
  split_input_grad(grads.t2.input, g_v1, grad_cond);

  return hconcat(g_v1, g_v2);
}

}  // namespace zsflow
