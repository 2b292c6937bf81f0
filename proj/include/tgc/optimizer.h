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
#ifndef TGC_OPTIMIZER_H_
#define TGC_OPTIMIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tgc {

enum class OptimizerKind { kMomentum, kAdam };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  // Learning rate decays geometrically from lr_initial to lr_final over
  // anneal_epochs epochs and stays at lr_final afterwards.
  double lr_initial = 1e-3;
  double lr_final = 1e-4;
  std::size_t anneal_epochs = 10;
  OptimizerKind optimizer = OptimizerKind::kMomentum;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  double LearningRate(std::size_t epoch) const;
};

OptimizerKind ParseOptimizerKind(const std::string& name);

using ParamBlocks = std::vector<std::span<double>>;
using ConstParamBlocks = std::vector<std::span<const double>>;

// First-order update over a fixed list of parameter blocks. State is sized
// on the first Step; later calls must pass blocks of the same shapes.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}

  void Step(const ParamBlocks& params, const ConstParamBlocks& grads,
            double lr);

 private:
  TrainConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::uint64_t steps_ = 0;
};

}  // namespace tgc

#endif  // TGC_OPTIMIZER_H_
