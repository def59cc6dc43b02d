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
#include <span>
#include <string_view>
#include <vector>

#include "zsflow/numcore/mlp.hpp"

namespace zsflow {

// Scores visual-semantic pairs: g(x, a) = Sigmoid(W2 ReLU(W1 [x, a] + b1) + b2).
class ContrastiveNet {
 public:
  ContrastiveNet() = default;
  // Throws ConfigError unless the net maps d_v + d_a -> 1 through a final sigmoid.
  ContrastiveNet(Mlp net, std::size_t d_v);

  static ContrastiveNet random(std::size_t d_v, std::size_t d_a, std::size_t hidden, Rng& rng);

  std::size_t d_v() const noexcept { return d_v_; }
  std::size_t d_a() const noexcept { return net_.in_dim() - d_v_; }
  const Mlp& net() const noexcept { return net_; }
  Mlp& net() noexcept { return net_; }

  // FNV-1a over the raw parameter bytes; used to check that mining leaves the net untouched.
  std::uint64_t parameter_hash() const;

  bool operator==(const ContrastiveNet&) const = default;

 private:
  Mlp net_;
  std::size_t d_v_ = 0;
};

// Row i of the result holds g(x_i, a_c) for every seen class c.
Matrix contrastive_scores(const ContrastiveNet& cn, const Matrix& x, const Matrix& seen_attributes);
Vector contrastive_scores(const ContrastiveNet& cn, std::span<const double> x,
                          const Matrix& seen_attributes);

// sum_i (score_i - onehot_i)^2.
double contrastive_loss(std::span<const double> scores, std::size_t true_class);

// sum_i g_i log g_i with g clamped to [1e-12, 1 - 1e-12]. This is the negative
// of the Shannon entropy.
double prediction_entropy(std::span<const double> scores);

// -sum_i g_i log g_i with the same clamping.
double shannon_entropy(std::span<const double> scores);

// Mean over rows of contrastive_loss, with parameter gradients written to
// `tape` (overwriting it).
double contrastive_batch_loss(const ContrastiveNet& cn, const Matrix& x,
                              std::span<const std::size_t> labels, const Matrix& seen_attributes,
                              GradTape* tape = nullptr);

struct ContrastiveTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// Adam on the mean pair loss over all seen classes. `labels` index rows of
// `seen_attributes`. Returns the mean loss of each epoch. Throws
// DivergenceError if the loss stops being finite.
std::vector<double> train_contrastive(ContrastiveNet& cn, const Matrix& x,
                                      std::span<const std::size_t> labels,
                                      const Matrix& seen_attributes,
                                      const ContrastiveTrainConfig& config);

enum class SignMode { kIntent, kPaperLiteral };

std::string_view to_string(SignMode mode);
SignMode sign_mode_from_string(std::string_view name);

struct MiningConfig {
  double eta = 0.05;
  std::size_t steps = 10;
  double lambda_ent = 1.0;
  SignMode sign_mode = SignMode::kIntent;

  // Throws ConfigError unless eta > 0, steps >= 1 and lambda_ent >= 0.
  void validate() const;
};

// Per row: objective L_con + lambda_ent * H and its gradient with respect to x.
struct MiningObjective {
  Vector value;
  Matrix grad_x;
};

MiningObjective mining_objective(const ContrastiveNet& cn, const Matrix& x,
                                 std::span<const std::size_t> labels,
                                 const Matrix& seen_attributes, double lambda_ent);

// K gradient steps on x with the network frozen.
//   intent:        x <- x - eta * grad(L_con + lambda * H)
//   paper_literal: x <- x + eta * grad(L_con - lambda * H)
// Rows are independent. Throws DivergenceError naming the step if x stops
// being finite.
Matrix mine_boundary(const ContrastiveNet& cn, const Matrix& x, std::span<const std::size_t> labels,
                     const Matrix& seen_attributes, const MiningConfig& config);
Vector mine_boundary(const ContrastiveNet& cn, std::span<const double> x, std::size_t true_class,
                     const Matrix& seen_attributes, const MiningConfig& config);

struct PerturbConfig {
  double lambda_perturb = 0.05;
  double p_drop = 1.0;  // probability of keeping each dimension's noise

  void validate() const;
};

// x + lambda * (e * m), e ~ N(0, I), m_j ~ Bernoulli(p_drop).
Vector perturb(std::span<const double> x, const PerturbConfig& config, Rng& rng);
Matrix perturb(const Matrix& x, const PerturbConfig& config, Rng& rng);

}  // namespace zsflow
