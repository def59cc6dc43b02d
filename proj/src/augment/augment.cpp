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

#include "zsflow/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "zsflow/errors.hpp"
#include "zsflow/numcore/adam.hpp"

namespace zsflow {

namespace {

constexpr double kScoreFloor = 1e-12;

double clamp_score(double g) { return std::clamp(g, kScoreFloor, 1.0 - kScoreFloor); }

// Row b * C + c holds [x_b, a_c].
Matrix pair_inputs(const Matrix& x, const Matrix& attrs) {
  const std::size_t n_cls = attrs.rows();
  Matrix pairs(x.rows() * n_cls, x.cols() + attrs.cols());
  for (std::size_t b = 0; b < x.rows(); ++b) {
    for (std::size_t c = 0; c < n_cls; ++c) {
      auto dst = pairs.row(b * n_cls + c);
      std::copy(x.row(b).begin(), x.row(b).end(), dst.begin());
      std::copy(attrs.row(c).begin(), attrs.row(c).end(), dst.begin() + x.cols());
    }
  }
  return pairs;
}

void check_dims(const ContrastiveNet& cn, const Matrix& x, const Matrix& attrs) {
  if (x.cols() != cn.d_v() || attrs.cols() != cn.d_a()) {
    throw ConfigError("contrastive net expects d_v=" + std::to_string(cn.d_v()) +
                      ", d_a=" + std::to_string(cn.d_a()) + " but got " +
                      std::to_string(x.cols()) + ", " + std::to_string(attrs.cols()));
  }
}

void check_labels(std::span<const std::size_t> labels, std::size_t rows, std::size_t n_cls) {
  if (labels.size() != rows) throw ConfigError("contrastive: one label per row is required");
  for (std::size_t y : labels) {
    if (y >= n_cls) throw ConfigError("contrastive: label " + std::to_string(y) + " out of range");
  }
}

std::vector<std::size_t> idx_labels(std::span<const std::size_t> labels,
                                    std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

ContrastiveNet::ContrastiveNet(Mlp net, std::size_t d_v) : net_(std::move(net)), d_v_(d_v) {
  if (net_.empty() || net_.out_dim() != 1 || net_.in_dim() <= d_v ||
      net_.layers().back().activation != Activation::kSigmoid) {
    throw ConfigError("contrastive net must end in a single sigmoid unit");
  }
}

ContrastiveNet ContrastiveNet::random(std::size_t d_v, std::size_t d_a, std::size_t hidden,
                                      Rng& rng) {
  return ContrastiveNet(
      make_two_layer(d_v + d_a, hidden, 1, Activation::kReLU, Activation::kSigmoid, rng), d_v);
}

std::uint64_t ContrastiveNet::parameter_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& block : net_.parameter_blocks()) {
    for (double v : block) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

Matrix contrastive_scores(const ContrastiveNet& cn, const Matrix& x,
                          const Matrix& seen_attributes) {
  check_dims(cn, x, seen_attributes);
  const Matrix out = cn.net().forward(pair_inputs(x, seen_attributes));
  return Matrix::from_data(x.rows(), seen_attributes.rows(),
                           {out.values().begin(), out.values().end()});
}

Vector contrastive_scores(const ContrastiveNet& cn, std::span<const double> x,
                          const Matrix& seen_attributes) {
  const Matrix s = contrastive_scores(cn, Matrix::row_vector(x), seen_attributes);
  return {s.values().begin(), s.values().end()};
}

double contrastive_loss(std::span<const double> scores, std::size_t true_class) {
  if (true_class >= scores.size()) throw ConfigError("contrastive loss: class index out of range");
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - (i == true_class ? 1.0 : 0.0);
    acc += d * d;
  }
  return acc;
}

double prediction_entropy(std::span<const double> scores) {
  double acc = 0.0;
  for (double g : scores) {
    const double c = clamp_score(g);
    acc += c * std::log(c);
  }
  return acc;
}

double shannon_entropy(std::span<const double> scores) { return -prediction_entropy(scores); }

double contrastive_batch_loss(const ContrastiveNet& cn, const Matrix& x,
                              std::span<const std::size_t> labels, const Matrix& seen_attributes,
                              GradTape* tape) {
  check_dims(cn, x, seen_attributes);
  check_labels(labels, x.rows(), seen_attributes.rows());
  const std::size_t n_cls = seen_attributes.rows();
  MlpTrace trace;
  const Matrix g = cn.net().forward(pair_inputs(x, seen_attributes), trace);
  Matrix upstream(g.rows(), 1);
  const double inv_b = 1.0 / static_cast<double>(x.rows());
  double loss = 0.0;
  for (std::size_t b = 0; b < x.rows(); ++b) {
    for (std::size_t c = 0; c < n_cls; ++c) {
      const double d = g(b * n_cls + c, 0) - (labels[b] == c ? 1.0 : 0.0);
      loss += d * d;
      upstream(b * n_cls + c, 0) = 2.0 * d * inv_b;
    }
  }
  if (tape != nullptr) cn.net().backward_into(trace, upstream, *tape, Accumulate::kNo);
  return loss * inv_b;
}

std::vector<double> train_contrastive(ContrastiveNet& cn, const Matrix& x,
                                      std::span<const std::size_t> labels,
                                      const Matrix& seen_attributes,
                                      const ContrastiveTrainConfig& config) {
  check_dims(cn, x, seen_attributes);
  check_labels(labels, x.rows(), seen_attributes.rows());
  if (x.rows() == 0) throw InputError("contrastive training: no seen samples");
  if (config.batch_size == 0) throw ConfigError("contrastive training: batch_size must be positive");

  Adam adam(AdamOptions{.lr = config.lr});
  GradTape tape = cn.net().make_tape();
  std::vector<ParamSlot> slots;
  cn.net().append_slots(tape, slots);
  Rng rng(config.seed, 0);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const double batch_loss = contrastive_batch_loss(cn, gather_rows(x, idx),
                                                       idx_labels(labels, idx), seen_attributes, &tape);
      adam.step(slots);
      epoch_loss += batch_loss * static_cast<double>(idx.size());
    }
    epoch_loss /= static_cast<double>(x.rows());
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("contrastive training diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(epoch_loss);
  }
  return history;
}

std::string_view to_string(SignMode mode) {
  return mode == SignMode::kIntent ? "intent" : "paper_literal";
}

SignMode sign_mode_from_string(std::string_view name) {
  if (name == "intent") return SignMode::kIntent;
  if (name == "paper_literal") return SignMode::kPaperLiteral;
  throw ConfigError("unknown sign_mode '" + std::string(name) + "'");
}

void MiningConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("mining: eta must be positive");
  if (steps < 1) throw ConfigError("mining: steps (K) must be at least 1");
  if (!(lambda_ent >= 0.0)) throw ConfigError("mining: lambda_ent must be non-negative");
}

MiningObjective mining_objective(const ContrastiveNet& cn, const Matrix& x,
                                 std::span<const std::size_t> labels,
                                 const Matrix& seen_attributes, double lambda_ent) {
  check_dims(cn, x, seen_attributes);
  check_labels(labels, x.rows(), seen_attributes.rows());
  const std::size_t n_cls = seen_attributes.rows();
  MlpTrace trace;
  const Matrix g = cn.net().forward(pair_inputs(x, seen_attributes), trace);

  MiningObjective out{Vector(x.rows(), 0.0), Matrix(x.rows(), x.cols())};
  Matrix upstream(g.rows(), 1);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    double value = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c) {
      const double score = g(b * n_cls + c, 0);
      const double d = score - (labels[b] == c ? 1.0 : 0.0);
      const double clamped = clamp_score(score);
      const double log_g = std::log(clamped);
      value += d * d + lambda_ent * clamped * log_g;
      upstream(b * n_cls + c, 0) = 2.0 * d + lambda_ent * (log_g + 1.0);
    }
    out.value[b] = value;
  }
  const GradTape tape = cn.net().backward(trace, upstream);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    auto dst = out.grad_x.row(b);
    for (std::size_t c = 0; c < n_cls; ++c) {
      const auto src = tape.input.row(b * n_cls + c);
      for (std::size_t j = 0; j < x.cols(); ++j) dst[j] += src[j];
    }
  }
  return out;
}

Matrix mine_boundary(const ContrastiveNet& cn, const Matrix& x, std::span<const std::size_t> labels,
                     const Matrix& seen_attributes, const MiningConfig& config) {
  config.validate();
  const bool literal = config.sign_mode == SignMode::kPaperLiteral;
  // Literal: ascend L_con - lambda H. Intent: descend L_con + lambda H.
  const double lambda = literal ? -config.lambda_ent : config.lambda_ent;
  const double direction = literal ? 1.0 : -1.0;
  Matrix current = x;
  for (std::size_t k = 0; k < config.steps; ++k) {
    const MiningObjective obj = mining_objective(cn, current, labels, seen_attributes, lambda);
    for (std::size_t i = 0; i < current.size(); ++i) {
      current.values()[i] += direction * config.eta * obj.grad_x.values()[i];
    }
    if (!all_finite(current.values())) {
      throw DivergenceError("boundary mining produced non-finite features at step " +
                            std::to_string(k));
    }
  }
  return current;
}

Vector mine_boundary(const ContrastiveNet& cn, std::span<const double> x, std::size_t true_class,
                     const Matrix& seen_attributes, const MiningConfig& config) {
  const std::size_t label[] = {true_class};
  const Matrix out = mine_boundary(cn, Matrix::row_vector(x), label, seen_attributes, config);
  return {out.values().begin(), out.values().end()};
}

void PerturbConfig::validate() const {
  if (!(lambda_perturb >= 0.0)) throw ConfigError("perturb: lambda_perturb must be non-negative");
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw ConfigError("perturb: p_drop must lie in [0, 1]");
}

Vector perturb(std::span<const double> x, const PerturbConfig& config, Rng& rng) {
  config.validate();
  Vector out(x.begin(), x.end());
  for (double& v : out) {
    // Both draws are always taken so the stream position does not depend on p_drop.
    const double e = rng.normal();
    const bool keep = rng.bernoulli(config.p_drop);
    if (keep) v += config.lambda_perturb * e;
  }
  return out;
}

Matrix perturb(const Matrix& x, const PerturbConfig& config, Rng& rng) {
  config.validate();
  Matrix out = x;
  for (double& v : out.values()) {
    const double e = rng.normal();
    const bool keep = rng.bernoulli(config.p_drop);
    if (keep) v += config.lambda_perturb * e;
  }
  return out;
}

}  // namespace zsflow
