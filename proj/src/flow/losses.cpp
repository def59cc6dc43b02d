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

#include "zsflow/flow/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

double gaussian_log_density(std::span<const double> z) {
  return -0.5 * squared_norm(z) - 0.5 * static_cast<double>(z.size()) * kLogTwoPi;
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw DivergenceError(std::string(what) + " is not finite");
}

template <typename Fn>
void for_each_net(const FlowModel& model, FlowGrads& grads, Fn&& fn) {
  for (std::size_t l = 0; l < model.depth(); ++l) {
    const auto& layer = model.layers()[l];
    auto& g = grads.layers[l];
    fn(layer.s1, g.s1);
    fn(layer.t1, g.t1);
    fn(layer.s2, g.s2);
    fn(layer.t2, g.t2);
  }
}

}  // namespace

Vector log_density(const FlowModel& model, const Matrix& x, const Matrix& cond) {
  const FlowOutput out = flow_forward(model, x, cond);
  Vector logp(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    logp[r] = gaussian_log_density(out.z.row(r)) + out.logdet[r];
  }
  return logp;
}

double nll_loss(const FlowModel& model, const Matrix& x, const Matrix& cond) {
  if (x.rows() == 0) throw ConfigError("nll: empty batch");
  const Vector logp = log_density(model, x, cond);
  double acc = 0.0;
  for (double v : logp) acc -= v;
  const double nll = acc / static_cast<double>(x.rows());
  require_finite(nll, "negative log-likelihood");
  return nll;
}

double nll_loss_grad(const FlowModel& model, const Matrix& x, const Matrix& cond,
                     FlowGrads& grads, Matrix* grad_cond) {
  if (x.rows() == 0) throw ConfigError("nll: empty batch");
  FlowTrace trace;
  const FlowOutput out = flow_forward(model, x, cond, &trace);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double acc = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    acc -= gaussian_log_density(out.z.row(r)) + out.logdet[r];
  }
  const double nll = acc * inv_n;
  require_finite(nll, "negative log-likelihood");

  // d/dz of 0.5 |z|^2 / n and d/dlogdet of -logdet / n.
  Matrix grad_z = out.z;
  for (double& g : grad_z.values()) g *= inv_n;
  const Vector grad_logdet(x.rows(), -inv_n);
  flow_forward_backward(model, trace, grad_z, grad_logdet, grads, grad_cond);
  return nll;
}

double prior_penalty(const FlowModel& model, double weight_decay) {
  if (weight_decay < 0.0) throw ConfigError("prior penalty: weight_decay must be non-negative");
  if (weight_decay == 0.0) return 0.0;
  return 0.5 * weight_decay * model.squared_parameter_norm();
}

double prior_penalty_grad(const FlowModel& model, double weight_decay, FlowGrads& grads) {
  const double penalty = prior_penalty(model, weight_decay);
  if (weight_decay == 0.0) return penalty;
  if (grads.layers.size() != model.depth()) grads = FlowGrads::like(model);
  for_each_net(model, grads, [weight_decay](const Mlp& net, GradTape& tape) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const auto& d = net.layers()[l];
      for (std::size_t i = 0; i < d.weight.size(); ++i) {
        tape.weight[l].values()[i] += weight_decay * d.weight.values()[i];
      }
      for (std::size_t i = 0; i < d.bias.size(); ++i) {
        tape.bias[l][i] += weight_decay * d.bias[i];
      }
    }
  });
  return penalty;
}

double prototype_loss(const FlowModel& model, const Matrix& prototypes, const Matrix& cond) {
  if (prototypes.rows() != cond.rows() || prototypes.rows() == 0) {
    throw ConfigError("prototype loss: prototypes and conditions must align and be non-empty");
  }
  const Matrix zero(prototypes.rows(), model.d_v());
  const Matrix x = flow_generate(model, zero, cond);
  require_same_shape(x, prototypes, "prototype loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - prototypes.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(prototypes.rows());
}

double prototype_loss_grad(const FlowModel& model, const Matrix& prototypes, const Matrix& cond,
                           FlowGrads& grads, Matrix* grad_cond, double scale) {
  if (prototypes.rows() != cond.rows() || prototypes.rows() == 0) {
    throw ConfigError("prototype loss: prototypes and conditions must align and be non-empty");
  }
  const double inv_c = 1.0 / static_cast<double>(prototypes.rows());
  const Matrix zero(prototypes.rows(), model.d_v());
  FlowTrace trace;
  const Matrix x = flow_generate(model, zero, cond, &trace);
  require_same_shape(x, prototypes, "prototype loss");
  Matrix grad_x(x.rows(), x.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - prototypes.values()[i];
    acc += d * d;
    grad_x.values()[i] = 2.0 * d * inv_c * scale;
  }
  flow_generate_backward(model, trace, grad_x, grads, grad_cond);
  const double loss = acc * inv_c;
  require_finite(loss, "prototype loss");
  return loss;
}

}  // namespace zsflow
