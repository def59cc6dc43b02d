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

#include "zsflow/flow/flow_model.hpp"

namespace zsflow {

// Components of the flow objective for one batch.
struct FlowLoss {
  double nll = 0.0;
  double prior_penalty = 0.0;
  double proto = 0.0;
  double total = 0.0;
};

// Per-row log p_X(x | cond) under the standard normal prior.
Vector log_density(const FlowModel& model, const Matrix& x, const Matrix& cond);

// Mean over rows of -log p_X. Throws DivergenceError if the result is not finite.
double nll_loss(const FlowModel& model, const Matrix& x, const Matrix& cond);

// As nll_loss, accumulating parameter gradients into `grads` and, when
// non-null, adding d(loss)/dcond into `grad_cond`.
double nll_loss_grad(const FlowModel& model, const Matrix& x, const Matrix& cond,
                     FlowGrads& grads, Matrix* grad_cond);

// Gaussian prior on the flow parameters: weight_decay * 0.5 * sum(theta^2).
double prior_penalty(const FlowModel& model, double weight_decay);
double prior_penalty_grad(const FlowModel& model, double weight_decay, FlowGrads& grads);

// (1/C) sum_c || f^-1(0, cond_c) - prototype_c ||^2.
double prototype_loss(const FlowModel& model, const Matrix& prototypes, const Matrix& cond);
// Gradients are those of scale * prototype_loss; the unscaled loss is returned.
double prototype_loss_grad(const FlowModel& model, const Matrix& prototypes, const Matrix& cond,
                           FlowGrads& grads, Matrix* grad_cond, double scale = 1.0);

}  // namespace zsflow
