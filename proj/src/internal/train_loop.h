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
#ifndef TGC_INTERNAL_TRAIN_LOOP_H_
#define TGC_INTERNAL_TRAIN_LOOP_H_

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tgc/error.h"
#include "tgc/optimizer.h"
#include "tgc/random.h"

namespace tgc::internal {

// Shuffled mini-batch loop shared by the trainable models.
//
// LossFn: double(const Model&, const std::vector<const Example*>&, Model*)
//   returns the mean batch loss and writes the mean gradient.
// ZerosFn: Model(const Model&) returns a zero gradient holder.
template <typename Model, typename Example, typename LossFn, typename ZerosFn>
Model RunTraining(const std::vector<Example>& examples,
                  const TrainConfig& config, Model model, LossFn&& loss_fn,
                  ZerosFn&& zeros_fn, std::vector<double>* epoch_loss,
                  const char* name) {
  if (examples.empty()) {
    throw TrainingError(std::string(name) + ": no training examples");
  }
  Rng rng(config.seed);
  Optimizer optimizer(config);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.LearningRate(epoch);
    Shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<const Example*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&examples[order[i]]);
      }
      Model grad = zeros_fn(model);
      const double loss = loss_fn(model, batch, &grad);
      bool finite = std::isfinite(loss);
      for (auto block : grad.Blocks()) {
        for (double g : block) finite = finite && std::isfinite(g);
      }
      if (!finite) {
        throw TrainingError(std::string(name) + ": non-finite loss " +
                            std::to_string(loss) + " at epoch " +
                            std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + ", lr " +
                            std::to_string(lr));
      }
      total += loss * static_cast<double>(end - start);
      optimizer.Step(model.MutableBlocks(), grad.Blocks(), lr);
    }
    const double mean = total / static_cast<double>(order.size());
    if (epoch_loss != nullptr) epoch_loss->push_back(mean);
    spdlog::debug("{}: epoch {} lr {:.6f} loss {:.6f}", name, epoch, lr, mean);
  }
  return model;
}

}  // namespace tgc::internal

#endif  // TGC_INTERNAL_TRAIN_LOOP_H_
