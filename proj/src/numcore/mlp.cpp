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

#include "zsflow/numcore/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

namespace {

double activate(Activation act, double x) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::kLeakyReLU:
      return x > 0.0 ? x : kLeakySlope * x;
    case Activation::kSigmoid:
      // Split on sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
  }
  return x;
}

// Derivative expressed through the activation output y.
double activate_grad(Activation act, double y) {
  switch (act) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kReLU:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyReLU:
      return y > 0.0 ? 1.0 : kLeakySlope;
    case Activation::kSigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

void dense_forward(const Dense& layer, const Matrix& in, Matrix& out) {
  const std::size_t n_in = layer.in_dim();
  const std::size_t n_out = layer.out_dim();
  out = Matrix(in.rows(), n_out);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    double* y = out.row(r).data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = layer.weight.row(o).data();
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      y[o] = activate(layer.activation, acc);
    }
  }
}

Mlp build(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng* rng) {
  if (dims.size() < 2 || acts.size() + 1 != dims.size()) {
    throw ConfigError("mlp: need at least two dims and one activation per layer");
  }
  std::vector<Dense> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Dense d{Matrix(dims[l + 1], dims[l]), Vector(dims[l + 1], 0.0), acts[l]};
    if (rng != nullptr) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      for (double& w : d.weight.values()) w = rng->uniform(-bound, bound);
      for (double& b : d.bias) b = rng->uniform(-bound, bound);
    }
    layers.push_back(std::move(d));
  }
  return Mlp(std::move(layers));
}

}  // namespace

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kReLU:
      return "relu";
    case Activation::kLeakyReLU:
      return "leaky_relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kReLU;
  if (name == "leaky_relu") return Activation::kLeakyReLU;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void GradTape::zero() {
  for (auto& w : weight) w.fill(0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
  input.fill(0.0);
}

Mlp::Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Dense& d = layers_[l];
    if (d.bias.size() != d.out_dim()) {
      throw ConfigError("mlp layer " + std::to_string(l) + ": bias length " +
                        std::to_string(d.bias.size()) + " != output dim " +
                        std::to_string(d.out_dim()));
    }
    if (l > 0 && layers_[l - 1].out_dim() != d.in_dim()) {
      throw ConfigError("mlp layer " + std::to_string(l) + ": input dim " +
                        std::to_string(d.in_dim()) + " does not chain with previous output " +
                        std::to_string(layers_[l - 1].out_dim()));
    }
  }
}

Mlp Mlp::random(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng& rng) {
  return build(dims, acts, &rng);
}

Mlp Mlp::zeros(std::span<const std::size_t> dims, std::span<const Activation> acts) {
  return build(dims, acts, nullptr);
}

std::size_t Mlp::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& d : layers_) n += d.weight.size() + d.bias.size();
  return n;
}

Matrix Mlp::forward(const Matrix& input) const {
  if (layers_.empty()) throw StateError("mlp: forward on an empty network");
  if (input.cols() != in_dim()) {
    throw ConfigError("mlp: input has " + std::to_string(input.cols()) + " columns, expected " +
                      std::to_string(in_dim()));
  }
  Matrix current = input;
  Matrix next;
  for (const auto& layer : layers_) {
    dense_forward(layer, current, next);
    std::swap(current, next);
  }
  return current;
}

Matrix Mlp::forward(const Matrix& input, MlpTrace& trace) const {
  if (layers_.empty()) throw StateError("mlp: forward on an empty network");
  if (input.cols() != in_dim()) {
    throw ConfigError("mlp: input has " + std::to_string(input.cols()) + " columns, expected " +
                      std::to_string(in_dim()));
  }
  trace.activations.resize(layers_.size() + 1);
  trace.activations[0] = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    dense_forward(layers_[l], trace.activations[l], trace.activations[l + 1]);
  }
  return trace.activations.back();
}

GradTape Mlp::make_tape() const {
  GradTape tape;
  for (const auto& d : layers_) {
    tape.weight.emplace_back(d.weight.rows(), d.weight.cols());
    tape.bias.emplace_back(d.bias.size(), 0.0);
  }
  return tape;
}

GradTape Mlp::backward(const MlpTrace& trace, const Matrix& upstream) const {
  GradTape tape = make_tape();
  backward_into(trace, upstream, tape, Accumulate::kNo);
  return tape;
}

void Mlp::backward_into(const MlpTrace& trace, const Matrix& upstream, GradTape& tape,
                        Accumulate mode) const {
  if (trace.empty()) throw StateError("mlp: backward called before forward");
  if (trace.activations.size() != layers_.size() + 1 ||
      trace.activations.front().cols() != in_dim()) {
    throw StateError("mlp: trace was not recorded by this network");
  }
  const Matrix& out = trace.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ConfigError("mlp: upstream gradient shape does not match the forward output");
  }
  if (tape.weight.size() != layers_.size()) tape = make_tape();
  if (mode == Accumulate::kNo) {
    for (auto& w : tape.weight) w.fill(0.0);
    for (auto& b : tape.bias) std::fill(b.begin(), b.end(), 0.0);
  }

  const std::size_t batch = upstream.rows();
  Matrix delta = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Dense& layer = layers_[l];
    const Matrix& y = trace.activations[l + 1];
    const Matrix& x = trace.activations[l];
    const std::size_t n_in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();

    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta.values()[i] *= activate_grad(layer.activation, y.values()[i]);
    }

    Matrix& gw = tape.weight[l];
    Vector& gb = tape.bias[l];
    Matrix prev(batch, n_in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* d = delta.row(r).data();
      const double* xr = x.row(r).data();
      double* pr = prev.row(r).data();
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        gb[o] += g;
        double* gwr = gw.row(o).data();
        const double* wr = layer.weight.row(o).data();
        for (std::size_t i = 0; i < n_in; ++i) {
          gwr[i] += g * xr[i];
          pr[i] += g * wr[i];
        }
      }
    }
    delta = std::move(prev);
  }
  tape.input = std::move(delta);
}

std::vector<std::span<double>> Mlp::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& d : layers_) {
    blocks.emplace_back(d.weight.values());
    blocks.emplace_back(d.bias);
  }
  return blocks;
}

std::vector<std::span<const double>> Mlp::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& d : layers_) {
    blocks.emplace_back(d.weight.values());
    blocks.emplace_back(d.bias);
  }
  return blocks;
}

void Mlp::append_slots(const GradTape& tape, std::vector<ParamSlot>& slots) {
  if (tape.weight.size() != layers_.size()) {
    throw ConfigError("mlp: gradient tape does not mirror the network");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    slots.push_back({layers_[l].weight.values(), tape.weight[l].values()});
    slots.push_back({layers_[l].bias, tape.bias[l]});
  }
}

double Mlp::squared_parameter_norm() const {
  double acc = 0.0;
  for (const auto& block : parameter_blocks()) acc += squared_norm(block);
  return acc;
}

Mlp make_two_layer(std::size_t in, std::size_t hidden, std::size_t out, Activation hidden_act,
                   Activation out_act, Rng& rng) {
  const std::size_t dims[] = {in, hidden, out};
  const Activation acts[] = {hidden_act, out_act};
  return Mlp::random(dims, acts, rng);
}

}  // namespace zsflow
