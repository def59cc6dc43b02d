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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsflow/numcore/matrix.hpp"
#include "zsflow/numcore/rng.hpp"

namespace zsflow {

enum class Activation { kIdentity, kReLU, kLeakyReLU, kSigmoid };

inline constexpr double kLeakySlope = 0.01;

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

// One fully connected layer: y = act(x W^T + b), W stored out x in.
struct Dense {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  bool operator==(const Dense&) const = default;
};

// Intermediate activations recorded by Mlp::forward for a later backward pass.
// activations[0] is the input, activations[i + 1] the output of layer i.
struct MlpTrace {
  std::vector<Matrix> activations;

  bool empty() const noexcept { return activations.empty(); }
  const Matrix& output() const { return activations.back(); }
};

// Gradient buffers shaped like an Mlp's parameters, plus the input gradient of
// the most recent backward call.
struct GradTape {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  void zero();
};

enum class Accumulate { kNo, kYes };

// A parameter buffer and its gradient, the unit consumed by the optimizer.
struct ParamSlot {
  std::span<double> value;
  std::span<const double> grad;
};

class Mlp {
 public:
  Mlp() = default;
  // Throws ConfigError when consecutive layer dims do not chain.
  explicit Mlp(std::vector<Dense> layers);

  // dims = {in, hidden..., out}; acts has dims.size() - 1 entries. Weights and
  // biases are drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp random(std::span<const std::size_t> dims, std::span<const Activation> acts, Rng& rng);
  static Mlp zeros(std::span<const std::size_t> dims, std::span<const Activation> acts);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;
  bool empty() const noexcept { return layers_.empty(); }

  const std::vector<Dense>& layers() const noexcept { return layers_; }
  std::vector<Dense>& layers() noexcept { return layers_; }

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, MlpTrace& trace) const;

  // Fresh tape holding d(loss)/d(params) and d(loss)/d(input).
  GradTape backward(const MlpTrace& trace, const Matrix& upstream) const;

  // Writes parameter gradients into `tape` (adding to its contents when
  // mode == kYes) and overwrites tape.input. Throws StateError if the trace
  // is empty or was not produced by this network.
  void backward_into(const MlpTrace& trace, const Matrix& upstream, GradTape& tape,
                     Accumulate mode) const;

  GradTape make_tape() const;

  // Parameter views in a fixed order: layer 0 weight, layer 0 bias, layer 1 ...
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  void append_slots(const GradTape& tape, std::vector<ParamSlot>& slots);

  double squared_parameter_norm() const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<Dense> layers_;
};

// Two-layer network in -> hidden -> out, the building block used across the model zoo.
Mlp make_two_layer(std::size_t in, std::size_t hidden, std::size_t out, Activation hidden_act,
                   Activation out_act, Rng& rng);

}  // namespace zsflow
