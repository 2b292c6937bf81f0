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

namespace {

// Pairwise cosines are cached up to this vocabulary size (128 MiB).
constexpr std::size_t kMaxCachedVocab = 4096;

double LogSumExp(const std::vector<double>& s) {
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double x : s) z += std::exp(x - mx);
  return mx + std::log(z);
}

}  // namespace

ParamBlocks KernelModel::MutableBlocks() {
  return {std::span<double>(dense_w), std::span<double>(&dense_b, 1)};
}

ConstParamBlocks KernelModel::Blocks() const {
  return {std::span<const double>(dense_w),
          std::span<const double>(&dense_b, 1)};
}

KernelModel KernelModel::Default() {
  KernelModel m;
  m.mus.push_back(1.0);
  m.sigmas.push_back(1e-3);
  for (int i = 0; i < 10; ++i) {
    m.mus.push_back(0.9 - 0.2 * i);
    m.sigmas.push_back(0.1);
  }
  m.dense_w.assign(m.mus.size(), 0.0);
  return m;
}

void KernelModel::Validate() const {
  if (mus.empty()) throw ValidationError("kernel model needs at least 1 kernel");
  if (sigmas.size() != mus.size() || dense_w.size() != mus.size()) {
    throw ValidationError("kernel model: mus, sigmas and dense_w sizes differ");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) throw ValidationError("kernel model: sigma must be > 0");
  }
}

json KernelModel::ToJson() const {
  return {{"version", kModelFormatVersion}, {"type", "kernel"},
          {"mus", mus},                     {"sigmas", sigmas},
          {"dense_w", dense_w},             {"dense_b", dense_b}};
}

KernelModel KernelModel::FromJson(const json& j) {
  if (j.at("type") != "kernel") throw ParseError("not a kernel model", 0);
  CheckFormatVersion(j, "kernel model");
  KernelModel m;
  m.mus = j.at("mus").get<std::vector<double>>();
  m.sigmas = j.at("sigmas").get<std::vector<double>>();
  m.dense_w = j.at("dense_w").get<std::vector<double>>();
  m.dense_b = j.at("dense_b").get<double>();
  m.Validate();
  return m;
}

std::vector<double> KernelFeatures(double cos, const KernelModel& model) {
  std::vector<double> f(model.num_kernels());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = cos - model.mus[k];
    f[k] = std::exp(-(d * d) / (2.0 * model.sigmas[k] * model.sigmas[k]));
  }
  return f;
}

VocabEmbeddings::VocabEmbeddings(const KeywordVocab& vocab,
                                 const EmbeddingStore& store)
    : vocab_(vocab),
      store_(&store),
      size_(vocab.size()),
      dim_(store.dim()),
      matrix_(vocab.size() * store.dim()),
      norms_(vocab.size()) {
  for (std::size_t i = 0; i < size_; ++i) {
    std::span<double> row(&matrix_[i * dim_], dim_);
    store.Resolve(vocab.Word(i), row);
    double n = 0.0;
    for (double x : row) n += x * x;
    norms_[i] = std::sqrt(n);
  }
  if (size_ <= kMaxCachedVocab) {
    std::vector<double> pairwise(size_ * size_);
    for (std::size_t i = 0; i < size_; ++i) {
      const auto cos = CosinesTo(vocab.Word(i));
      std::copy(cos.begin(), cos.end(), pairwise.begin() + i * size_);
    }
    pairwise_ = std::move(pairwise);
  }
}

std::vector<double> VocabEmbeddings::CosinesTo(const std::string& word) const {
  if (!pairwise_.empty()) {
    if (auto id = vocab_.Find(word)) {
      return {pairwise_.begin() + *id * size_,
              pairwise_.begin() + (*id + 1) * size_};
    }
  }
  const auto v = store_->Resolve(word);
  double vn = 0.0;
  for (double x : v) vn += x * x;
  vn = std::sqrt(vn);
  std::vector<double> out(size_, 0.0);
  if (vn == 0.0) return out;
  for (std::size_t i = 0; i < size_; ++i) {
    if (norms_[i] == 0.0) continue;
    const double* row = Row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) dot += row[d] * v[d];
    out[i] = std::clamp(dot / (vn * norms_[i]), -1.0, 1.0);
  }
  return out;
}

std::vector<double> SummedKernelFeatures(const Keywords& current,
                                         const KernelModel& model,
                                         const VocabEmbeddings& emb) {
  const std::size_t k = model.num_kernels();
  std::vector<double> phi(emb.size() * k, 0.0);
  std::vector<double> inv_two_var(k);
  for (std::size_t i = 0; i < k; ++i) {
    inv_two_var[i] = 1.0 / (2.0 * model.sigmas[i] * model.sigmas[i]);
  }
  for (const auto& w : current) {
    const auto cos = emb.CosinesTo(w);
    for (std::size_t c = 0; c < emb.size(); ++c) {
      double* row = &phi[c * k];
      for (std::size_t i = 0; i < k; ++i) {
        const double d = cos[c] - model.mus[i];
        row[i] += std::exp(-(d * d) * inv_two_var[i]);
      }
    }
  }
  return phi;
}

namespace {

std::vector<double> KernelScores(const std::vector<double>& phi,
                                 const KernelModel& model, std::size_t v) {
  const std::size_t k = model.num_kernels();
  std::vector<double> s(v, model.dense_b);
  for (std::size_t c = 0; c < v; ++c) {
    const double* row = &phi[c * k];
    for (std::size_t i = 0; i < k; ++i) s[c] += model.dense_w[i] * row[i];
  }
  return s;
}

}  // namespace

KeywordDistribution PredictKernel(const Keywords& current,
                                  const KernelModel& model,
                                  const VocabEmbeddings& emb) {
  const auto phi = SummedKernelFeatures(current, model, emb);
  return Softmax(KernelScores(phi, model, emb.size()));
}

KernelPredictor::KernelPredictor(KernelModel model, KeywordVocab vocab,
                                 const EmbeddingStore& store)
    : model_(std::move(model)), vocab_(std::move(vocab)), emb_(vocab_, store) {
  model_.Validate();
}

KeywordDistribution KernelPredictor::Predict(const TransitionContext& ctx,
                                             Rng&) const {
  return PredictKernel(ctx.current, model_, emb_);
}

double KernelLoss(const KernelModel& model, const VocabEmbeddings& emb,
                  const KeywordVocab& vocab,
                  const std::vector<const TransitionExample*>& batch,
                  KernelModel* grad) {
  const std::size_t k = model.num_kernels();
  const std::size_t v = emb.size();
  if (grad != nullptr) {
    *grad = model;
    grad->dense_w.assign(k, 0.0);
    grad->dense_b = 0.0;
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (const TransitionExample* ex : batch) {
    std::vector<std::size_t> golds;
    for (const auto& g : ex->next_keywords) {
      if (auto id = vocab.Find(g)) golds.push_back(*id);
    }
    if (golds.empty()) continue;
    ++counted;
    const auto phi = SummedKernelFeatures(ex->current_keywords, model, emb);
    const auto scores = KernelScores(phi, model, v);
    const double lse = LogSumExp(scores);
    const double share = 1.0 / static_cast<double>(golds.size());
    for (std::size_t g : golds) total -= share * (scores[g] - lse);
    if (grad == nullptr) continue;
    // d loss / d score_c = p_c - y_c, with y the averaged gold indicator.
    std::vector<double> dscore(v);
    for (std::size_t c = 0; c < v; ++c) dscore[c] = std::exp(scores[c] - lse);
    for (std::size_t g : golds) dscore[g] -= share;
    for (std::size_t c = 0; c < v; ++c) {
      const double* row = &phi[c * k];
      for (std::size_t i = 0; i < k; ++i) grad->dense_w[i] += dscore[c] * row[i];
      grad->dense_b += dscore[c];
    }
  }
  if (counted == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(counted);
  if (grad != nullptr) {
    for (auto& g : grad->dense_w) g *= scale;
    grad->dense_b *= scale;
  }
  return total * scale;
}

KernelModel TrainKernel(const std::vector<TransitionExample>& examples,
                        const KeywordVocab& vocab, const EmbeddingStore& store,
                        const TrainConfig& config, KernelModel init,
                        TrainTrace* trace) {
  init.Validate();
  if (config.epochs == 0) return init;
  const VocabEmbeddings emb(vocab, store);
  auto loss = [&](const KernelModel& m,
                  const std::vector<const TransitionExample*>& batch,
                  KernelModel* grad) {
    return KernelLoss(m, emb, vocab, batch, grad);
  };
  auto zeros = [](const KernelModel& m) {
    KernelModel g = m;
    std::fill(g.dense_w.begin(), g.dense_w.end(), 0.0);
    g.dense_b = 0.0;
    return g;
  };
  return internal::RunTraining(examples, config, std::move(init), loss, zeros,
                               trace ? &trace->epoch_loss : nullptr, "kernel");
}

}  // namespace tgc
