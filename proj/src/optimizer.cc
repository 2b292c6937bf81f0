/*
 * Copyright 2026 The tgchat Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tgc/optimizer.h"

#include <algorithm>
#include <cmath>

#include "tgc/error.h"

namespace tgc {

double TrainConfig::LearningRate(std::size_t epoch) const {
  if (anneal_epochs <= 1) return lr_final;
  const double span = static_cast<double>(anneal_epochs - 1);
  const double t = std::min(static_cast<double>(epoch), span) / span;
  return lr_initial * std::pow(lr_final / lr_initial, t);
}

OptimizerKind ParseOptimizerKind(const std::string& name) {
  if (name == "momentum" || name == "sgd") return OptimizerKind::kMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ValidationError("unknown optimizer '" + name + "'");
}

void Optimizer::Step(const ParamBlocks& params, const ConstParamBlocks& grads,
                     double lr) {
  if (params.size() != grads.size()) {
    throw ContractError("optimizer: parameter/gradient block count mismatch");
  }
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.size(), 0.0);
      second_.emplace_back(config_.optimizer == OptimizerKind::kAdam ? p.size()
                                                                     : 0,
                           0.0);
    }
  }
  ++steps_;
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = first_[b];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw ContractError("optimizer: block shape changed between steps");
    }
    if (config_.optimizer == OptimizerKind::kMomentum) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = config_.momentum * m[i] + g[i];
        p[i] -= lr * m[i];
      }
    } else {
      auto& v = second_[b];
      const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.adam_eps);
      }
    }
  }
}

}  // namespace tgc
