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

#include "zsflow/numcore/adam.hpp"

#include <cmath>
#include <string>

#include "zsflow/errors.hpp"

namespace zsflow {

Adam::Adam(AdamOptions options) : options_(options) {
  if (!(options_.lr > 0.0) || options_.beta1 < 0.0 || options_.beta1 >= 1.0 ||
      options_.beta2 < 0.0 || options_.beta2 >= 1.0 || !(options_.eps > 0.0)) {
    throw ConfigError("adam: lr and eps must be positive, betas in [0, 1)");
  }
}

void Adam::step(std::span<const ParamSlot> slots) {
  if (step_ == 0) {
    m_.clear();
    v_.clear();
    for (const auto& s : slots) {
      m_.emplace_back(s.value.size(), 0.0);
      v_.emplace_back(s.value.size(), 0.0);
    }
  } else if (slots.size() != m_.size()) {
    throw ConfigError("adam: expected " + std::to_string(m_.size()) + " parameter slots, got " +
                      std::to_string(slots.size()));
  }
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k].grad.size() != slots[k].value.size() || slots[k].value.size() != m_[k].size()) {
      throw ConfigError("adam: slot " + std::to_string(k) + " shape mismatch");
    }
  }

  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    auto value = slots[k].value;
    auto grad = slots[k].grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      value[i] -= options_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps);
    }
  }
}

}  // namespace zsflow
