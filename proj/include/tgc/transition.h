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
#ifndef TGC_TRANSITION_H_
#define TGC_TRANSITION_H_

// Next-turn keyword prediction: pairwise PMI counts, a feed-forward neural
// predictor, an RBF-kernel predictor over embedding cosines, and a random
// baseline. All predictors emit a distribution over a KeywordVocab.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/optimizer.h"
#include "tgc/random.h"

namespace tgc {

inline constexpr int kModelFormatVersion = 1;

// Throws ValidationError unless j["version"] is kModelFormatVersion.
void CheckFormatVersion(const nlohmann::json& j, std::string_view what);

struct KeywordDistribution {
  std::vector<double> probs;

  // Ids of the k most probable keywords, ties broken by lower id.
  std::vector<std::size_t> TopK(std::size_t k) const;
  std::size_t Argmax() const;
  double Sum() const;
};

KeywordDistribution Softmax(const std::vector<double>& scores);

struct TransitionContext {
  std::vector<Keywords> history;  // keyword lists of all preceding turns
  Keywords current;               // keywords of the latest turn
};

inline TransitionContext ContextOf(const TransitionExample& ex) {
  return {ex.history_keywords, ex.current_keywords};
}

class TransitionPredictor {
 public:
  virtual ~TransitionPredictor() = default;
  virtual std::string_view kind() const = 0;
  virtual const KeywordVocab& vocab() const = 0;
  // Only the random baseline consumes `rng`.
  virtual KeywordDistribution Predict(const TransitionContext& ctx,
                                      Rng& rng) const = 0;
};

// ---------------------------------------------------------------------------
// PMI

// Counts keyword successions w_j (turn t) -> w_i (turn t+1) over transition
// examples, each keyword counted once per turn.
//   p(w_i | w_j) = #examples with w_j now and w_i next / #examples with w_j now
//   p(w_i)       = occurrences of w_i among next-turn keywords / total
//   PMI(w_i,w_j) = log(p(w_i | w_j) / p(w_i)), observed pairs only
class PmiTable {
 public:
  static PmiTable Fit(const std::vector<TransitionExample>& examples,
                      const KeywordVocab& vocab);

  std::size_t vocab_size() const { return marginal_counts_.size(); }
  double Marginal(std::size_t i) const;
  // p(next | prev); 0 when never observed.
  double Conditional(std::size_t next, std::size_t prev) const;
  // PMI(next, prev); nullopt when the pair was never observed.
  std::optional<double> Pmi(std::size_t next, std::size_t prev) const;

  // Observed successors of `prev` with their pair counts, ordered by id.
  const std::map<std::size_t, double>& Successors(std::size_t prev) const;

  nlohmann::json ToJson(const KeywordVocab& vocab) const;
  static PmiTable FromJson(const nlohmann::json& j, const KeywordVocab& vocab);

 private:
  std::vector<std::map<std::size_t, double>> pair_counts_;  // [prev][next]
  std::vector<double> row_totals_;
  std::vector<double> marginal_counts_;
  double marginal_total_ = 0.0;
};

// Score of candidate c is the sum of PMI(c, w) over current keywords w with
// an observed pair; scores are shifted by their minimum and normalized, with
// a uniform fallback when every score ties.
KeywordDistribution PredictPmi(const Keywords& current, const PmiTable& table,
                               const KeywordVocab& vocab);

class PmiPredictor : public TransitionPredictor {
 public:
  PmiPredictor(PmiTable table, KeywordVocab vocab)
      : table_(std::move(table)), vocab_(std::move(vocab)) {}
  std::string_view kind() const override { return "pmi"; }
  const KeywordVocab& vocab() const override { return vocab_; }
  KeywordDistribution Predict(const TransitionContext& ctx,
                              Rng& rng) const override;
  const PmiTable& table() const { return table_; }

 private:
  PmiTable table_;
  KeywordVocab vocab_;
};

// ---------------------------------------------------------------------------
// Kernel

struct KernelModel {
  std::vector<double> mus;
  std::vector<double> sigmas;
  std::vector<double> dense_w;
  double dense_b = 0.0;

  std::size_t num_kernels() const { return mus.size(); }
  ParamBlocks MutableBlocks();
  ConstParamBlocks Blocks() const;

  // One exact-match kernel (mu 1, sigma 1e-3) plus mus 0.9, 0.7, ..., -0.9
  // with sigma 0.1. Dense weights start at zero.
  static KernelModel Default();
  // Throws ValidationError unless K >= 1, sigmas > 0, and sizes agree.
  void Validate() const;

  nlohmann::json ToJson() const;
  static KernelModel FromJson(const nlohmann::json& j);
};

// feature_k = exp(-(cos - mu_k)^2 / (2 sigma_k^2))
std::vector<double> KernelFeatures(double cos, const KernelModel& model);

// Embedding matrix of a keyword vocabulary plus the cosine lookups the
// kernel predictor needs. Pairwise cosines are cached when the vocabulary is
// small enough. `store` must outlive this object.
class VocabEmbeddings {
 public:
  VocabEmbeddings(const KeywordVocab& vocab, const EmbeddingStore& store);

  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  const double* Row(std::size_t id) const { return &matrix_[id * dim_]; }
  // Cosine of `word` with every vocabulary entry.
  std::vector<double> CosinesTo(const std::string& word) const;

 private:
  KeywordVocab vocab_;
  const EmbeddingStore* store_;
  std::size_t size_;
  std::size_t dim_;
  std::vector<double> matrix_;
  std::vector<double> norms_;
  std::vector<double> pairwise_;  // size_ x size_, empty when not cached
};

// Summed kernel features phi(c) for every candidate c, row-major V x K.
std::vector<double> SummedKernelFeatures(const Keywords& current,
                                         const KernelModel& model,
                                         const VocabEmbeddings& emb);

KeywordDistribution PredictKernel(const Keywords& current,
                                  const KernelModel& model,
                                  const VocabEmbeddings& emb);

class KernelPredictor : public TransitionPredictor {
 public:
  KernelPredictor(KernelModel model, KeywordVocab vocab,
                  const EmbeddingStore& store);
  std::string_view kind() const override { return "kernel"; }
  const KeywordVocab& vocab() const override { return vocab_; }
  KeywordDistribution Predict(const TransitionContext& ctx,
                              Rng& rng) const override;
  const KernelModel& model() const { return model_; }

 private:
  KernelModel model_;
  KeywordVocab vocab_;
  VocabEmbeddings emb_;
};

// Mean negative log-likelihood of the gold keywords; with several golds the
// per-gold NLLs are averaged. `grad`, when given, receives the gradient of
// the mean loss over `batch` with respect to dense_w and dense_b; its
// previous contents are discarded.
double KernelLoss(const KernelModel& model, const VocabEmbeddings& emb,
                  const KeywordVocab& vocab,
                  const std::vector<const TransitionExample*>& batch,
                  KernelModel* grad);

struct TrainTrace {
  std::vector<double> epoch_loss;
};

// Trains dense_w and dense_b; mus, sigmas and embeddings stay fixed.
KernelModel TrainKernel(const std::vector<TransitionExample>& examples,
                        const KeywordVocab& vocab, const EmbeddingStore& store,
                        const TrainConfig& config, KernelModel init,
                        TrainTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Neural

// x = mean embedding of the flattened history keywords,
// h = tanh(w1 x + b1), scores = w2 h + b2, softmax over the vocabulary.
struct NeuralModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t vocab_size = 0;
  std::vector<double> w1;  // hidden x input
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // vocab x hidden
  std::vector<double> b2;  // vocab

  ParamBlocks MutableBlocks();
  ConstParamBlocks Blocks() const;

  // Xavier-uniform w1, zero b1, zero prediction layer.
  static NeuralModel Init(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t vocab_size, Rng& rng);
  static NeuralModel ZerosLike(const NeuralModel& m);

  nlohmann::json ToJson(const KeywordVocab& vocab) const;
  static NeuralModel FromJson(const nlohmann::json& j,
                              const KeywordVocab& vocab);
};

std::vector<double> EncodeKeywordHistory(const std::vector<Keywords>& history,
                                         const EmbeddingStore& store);

KeywordDistribution PredictNeural(const std::vector<Keywords>& history,
                                  const NeuralModel& model,
                                  const EmbeddingStore& store);

class NeuralPredictor : public TransitionPredictor {
 public:
  NeuralPredictor(NeuralModel model, KeywordVocab vocab,
                  const EmbeddingStore& store)
      : model_(std::move(model)), vocab_(std::move(vocab)), store_(&store) {}
  std::string_view kind() const override { return "neural"; }
  const KeywordVocab& vocab() const override { return vocab_; }
  KeywordDistribution Predict(const TransitionContext& ctx,
                              Rng& rng) const override;
  const NeuralModel& model() const { return model_; }

 private:
  NeuralModel model_;
  KeywordVocab vocab_;
  const EmbeddingStore* store_;
};

// Mean NLL as for the kernel model; `grad`, when given, is overwritten with
// the gradient over every parameter.
double NeuralLoss(const NeuralModel& model, const EmbeddingStore& store,
                  const KeywordVocab& vocab,
                  const std::vector<const TransitionExample*>& batch,
                  NeuralModel* grad);

NeuralModel TrainNeural(const std::vector<TransitionExample>& examples,
                        const KeywordVocab& vocab, const EmbeddingStore& store,
                        const TrainConfig& config, NeuralModel init,
                        TrainTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Random baseline

KeywordDistribution PredictRandom(const KeywordVocab& vocab, Rng& rng);

class RandomPredictor : public TransitionPredictor {
 public:
  explicit RandomPredictor(KeywordVocab vocab) : vocab_(std::move(vocab)) {}
  std::string_view kind() const override { return "random"; }
  const KeywordVocab& vocab() const override { return vocab_; }
  KeywordDistribution Predict(const TransitionContext& ctx,
                              Rng& rng) const override;

 private:
  KeywordVocab vocab_;
};

// ---------------------------------------------------------------------------
// Serialization: {"version": 1, "type": "pmi" | "kernel" | "neural", ...}

nlohmann::json ReadJsonFile(const std::string& path);
void WriteJsonFile(const nlohmann::json& j, const std::string& path);

std::unique_ptr<TransitionPredictor> LoadTransitionPredictor(
    const std::string& path, const KeywordVocab& vocab,
    const EmbeddingStore& store);

}  // namespace tgc

#endif  // TGC_TRANSITION_H_
