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
#include <algorithm>
#include <cmath>

#include "internal/train_loop.h"
#include "tgc/error.h"
#include "tgc/transition.h"

namespace tgc {

using nlohmann::json;

ParamBlocks NeuralModel::MutableBlocks() {
  return {std::span<double>(w1), std::span<double>(b1), std::span<double>(w2),
          std::span<double>(b2)};
}

ConstParamBlocks NeuralModel::Blocks() const {
  return {std::span<const double>(w1), std::span<const double>(b1),
          std::span<const double>(w2), std::span<const double>(b2)};
}

NeuralModel NeuralModel::Init(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t vocab_size, Rng& rng) {
  NeuralModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.vocab_size = vocab_size;
  const double limit =
      std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
  m.w1.resize(hidden_dim * input_dim);
  for (auto& x : m.w1) x = UniformReal(rng, -limit, limit);
  m.b1.assign(hidden_dim, 0.0);
  m.w2.assign(vocab_size * hidden_dim, 0.0);
  m.b2.assign(vocab_size, 0.0);
  return m;
}

NeuralModel NeuralModel::ZerosLike(const NeuralModel& m) {
  NeuralModel z = m;
  for (auto block : z.MutableBlocks()) std::fill(block.begin(), block.end(), 0.0);
  return z;
}

json NeuralModel::ToJson(const KeywordVocab& vocab) const {
  return {{"version", kModelFormatVersion},
          {"type", "neural"},
          {"input_dim", input_dim},
          {"hidden_dim", hidden_dim},
          {"vocab", vocab.words()},
          {"w1", w1},
          {"b1", b1},
          {"w2", w2},
          {"b2", b2}};
}

NeuralModel NeuralModel::FromJson(const json& j, const KeywordVocab& vocab) {
  if (j.at("type") != "neural") throw ParseError("not a neural model", 0);
  CheckFormatVersion(j, "neural model");
  if (j.at("vocab").get<std::vector<std::string>>() != vocab.words()) {
    throw ValidationError("neural model vocabulary does not match the corpus");
  }
  NeuralModel m;
  m.input_dim = j.at("input_dim").get<std::size_t>();
  m.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  m.vocab_size = vocab.size();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<std::vector<double>>();
  if (m.w1.size() != m.hidden_dim * m.input_dim ||
      m.b1.size() != m.hidden_dim ||
      m.w2.size() != m.vocab_size * m.hidden_dim ||
      m.b2.size() != m.vocab_size) {
    throw ValidationError("neural model parameter shapes are inconsistent");
  }
  return m;
}

std::vector<double> EncodeKeywordHistory(const std::vector<Keywords>& history,
                                         const EmbeddingStore& store) {
  std::vector<double> x(store.dim(), 0.0);
  std::vector<double> v(store.dim());
  std::size_t n = 0;
  for (const auto& turn : history) {
    for (const auto& w : turn) {
      store.Resolve(w, v);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += v[i];
      ++n;
    }
  }
  if (n > 0) {
    for (auto& xi : x) xi /= static_cast<double>(n);
  }
  return x;
}

namespace {

struct NeuralForward {
  std::vector<double> x;
  std::vector<double> h;
  std::vector<double> scores;
};

NeuralForward Forward(const std::vector<Keywords>& history,
                      const NeuralModel& m, const EmbeddingStore& store) {
  if (store.dim() != m.input_dim) {
    throw ContractError("neural model input dim does not match embeddings");
  }
  NeuralForward f;
  f.x = EncodeKeywordHistory(history, store);
  f.h.resize(m.hidden_dim);
  for (std::size_t r = 0; r < m.hidden_dim; ++r) {
    double z = m.b1[r];
    const double* w = &m.w1[r * m.input_dim];
    for (std::size_t c = 0; c < m.input_dim; ++c) z += w[c] * f.x[c];
    f.h[r] = std::tanh(z);
  }
  f.scores.resize(m.vocab_size);
  for (std::size_t r = 0; r < m.vocab_size; ++r) {
    double s = m.b2[r];
    const double* w = &m.w2[r * m.hidden_dim];
    for (std::size_t c = 0; c < m.hidden_dim; ++c) s += w[c] * f.h[c];
    f.scores[r] = s;
  }
  return f;
}

}  // namespace

KeywordDistribution PredictNeural(const std::vector<Keywords>& history,
                                  const NeuralModel& model,
                                  const EmbeddingStore& store) {
  return Softmax(Forward(history, model, store).scores);
}

KeywordDistribution NeuralPredictor::Predict(const TransitionContext& ctx,
                                             Rng&) const {
  return PredictNeural(ctx.history, model_, *store_);
}

double NeuralLoss(const NeuralModel& model, const EmbeddingStore& store,
                  const KeywordVocab& vocab,
                  const std::vector<const TransitionExample*>& batch,
                  NeuralModel* grad) {
  const std::size_t hd = model.hidden_dim, in = model.input_dim;
  if (grad != nullptr) *grad = NeuralModel::ZerosLike(model);
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> dh(hd);
  for (const TransitionExample* ex : batch) {
    std::vector<std::size_t> golds;
    for (const auto& g : ex->next_keywords) {
      if (auto id = vocab.Find(g)) golds.push_back(*id);
    }
    if (golds.empty()) continue;
    ++counted;
    const auto f = Forward(ex->history_keywords, model, store);
    const double mx = *std::max_element(f.scores.begin(), f.scores.end());
    double z = 0.0;
    for (double s : f.scores) z += std::exp(s - mx);
    const double lse = mx + std::log(z);
    const double share = 1.0 / static_cast<double>(golds.size());
    for (std::size_t g : golds) total -= share * (f.scores[g] - lse);
    if (grad == nullptr) continue;

    std::vector<double> ds(model.vocab_size);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      ds[r] = std::exp(f.scores[r] - lse);
    }
    for (std::size_t g : golds) ds[g] -= share;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < model.vocab_size; ++r) {
      if (ds[r] == 0.0) continue;
      grad->b2[r] += ds[r];
      double* gw = &grad->w2[r * hd];
      const double* w = &model.w2[r * hd];
      for (std::size_t c = 0; c < hd; ++c) {
        gw[c] += ds[r] * f.h[c];
        dh[c] += ds[r] * w[c];
      }
    }
    for (std::size_t r = 0; r < hd; ++r) {
      const double dz = dh[r] * (1.0 - f.h[r] * f.h[r]);
      grad->b1[r] += dz;
      double* gw = &grad->w1[r * in];
      for (std::size_t c = 0; c < in; ++c) gw[c] += dz * f.x[c];
    }
  }
  if (counted == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(counted);
  if (grad != nullptr) {
    for (auto block : grad->MutableBlocks()) {
      for (auto& g : block) g *= scale;
    }
  }
  return total * scale;
}

NeuralModel TrainNeural(const std::vector<TransitionExample>& examples,
                        const KeywordVocab& vocab, const EmbeddingStore& store,
                        const TrainConfig& config, NeuralModel init,
                        TrainTrace* trace) {
  if (init.vocab_size != vocab.size()) {
    throw ContractError("neural model output width differs from vocabulary");
  }
  if (config.epochs == 0) return init;
  auto loss = [&](const NeuralModel& m,
                  const std::vector<const TransitionExample*>& batch,
                  NeuralModel* grad) {
    return NeuralLoss(m, store, vocab, batch, grad);
  };
  return internal::RunTraining(examples, config, std::move(init), loss,
                               &NeuralModel::ZerosLike,
                               trace ? &trace->epoch_loss : nullptr, "neural");
}

}  // namespace tgc
