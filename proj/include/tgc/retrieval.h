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
#ifndef TGC_RETRIEVAL_H_
#define TGC_RETRIEVAL_H_

// Keyword-augmented response retrieval.
//
// Three encoders map the dialogue history, the chosen keyword and each
// candidate response to feature vectors of equal width. The match
// probability of a candidate c is
//
//   sigmoid(w . [history (*) c ; keyword (*) c] + b)
//
// where (*) is the element-wise product. A model built without keyword
// conditioning drops the second half, which gives the plain retrieval
// baseline.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/optimizer.h"
#include "tgc/random.h"
#include "tgc/transition.h"

namespace tgc {

// Placed between utterances of the history window. Order-insensitive
// encoders skip it.
inline constexpr const char* kTurnSeparator = "__eou__";

// Mean of the token embeddings (separator excluded); zeros when nothing
// remains. Unknown tokens follow the store's OOV policy.
std::vector<double> MeanEmbedding(const std::vector<std::string>& tokens,
                                  const EmbeddingStore& store);

// Tokens of the last `turns` utterances joined by kTurnSeparator.
std::vector<std::string> HistoryTokens(const std::vector<Utterance>& history,
                                       std::size_t turns = 2);

// feature = tanh(w x + b), w is out x in.
struct Encoder {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;
  std::vector<double> b;

  std::vector<double> Apply(const std::vector<double>& x) const;
  static Encoder Init(std::size_t in, std::size_t out, Rng& rng);
};

struct RetrievalModel {
  std::size_t dim = 0;     // embedding width
  std::size_t hidden = 0;  // feature width of every encoder
  bool keyword_conditioned = true;
  std::size_t history_turns = 2;
  Encoder history;
  Encoder keyword;  // empty when !keyword_conditioned
  Encoder candidate;
  std::vector<double> final_w;  // 2*hidden, or hidden without keywords
  double final_b = 0.0;

  ParamBlocks MutableBlocks();
  ConstParamBlocks Blocks() const;

  // One Xavier-uniform draw copied into every encoder, zero biases, zero
  // final layer.
  static RetrievalModel Init(std::size_t dim, std::size_t hidden,
                             bool keyword_conditioned, Rng& rng);
  static RetrievalModel ZerosLike(const RetrievalModel& m);

  // Hash of every parameter; pools compare it to detect stale features.
  std::uint64_t Fingerprint() const;

  nlohmann::json ToJson() const;
  static RetrievalModel FromJson(const nlohmann::json& j);
};

std::vector<double> Encode(const std::vector<std::string>& tokens,
                           const Encoder& encoder, const EmbeddingStore& store);

double ScoreResponse(const std::vector<double>& history_feat,
                     const std::vector<double>& keyword_feat,
                     const std::vector<double>& candidate_feat,
                     const RetrievalModel& model);

// Match probabilities of `candidates` given a history and a keyword
// (ignored by unconditioned models).
std::vector<double> ScoreCandidates(const RetrievalModel& model,
                                    const EmbeddingStore& store,
                                    const std::vector<Utterance>& history,
                                    const std::string& keyword,
                                    const std::vector<Utterance>& candidates);

// Unique responses (by text) with candidate features cached for one model.
class ResponsePool {
 public:
  ResponsePool() = default;

  static ResponsePool Build(std::vector<Utterance> utterances,
                            const RetrievalModel& model,
                            const EmbeddingStore& store);

  std::size_t size() const { return utterances_.size(); }
  bool empty() const { return utterances_.empty(); }
  const Utterance& at(std::size_t i) const { return utterances_.at(i); }
  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::size_t hidden() const { return hidden_; }
  std::uint64_t model_fingerprint() const { return fingerprint_; }
  const double* Feature(std::size_t i) const { return &features_[i * hidden_]; }

  // Writes `<prefix>.bin` (little-endian float32, size x hidden) and
  // `<prefix>.json` (dimensions, fingerprint and utterances).
  void SaveCache(const std::string& prefix) const;
  static ResponsePool LoadCache(const std::string& prefix);

 private:
  std::vector<Utterance> utterances_;
  std::vector<double> features_;
  std::size_t hidden_ = 0;
  std::uint64_t fingerprint_ = 0;
};

// First occurrence of each distinct utterance text, keywords kept.
std::vector<Utterance> UniqueUtterances(const Corpus& corpus);

struct ScoredResponse {
  std::size_t index = 0;  // into the pool
  double prob = 0.0;
};

// Top `top_k` pool entries by probability, ties by lower pool index. Only
// entries accepted by `filter` (when set) are ranked. Throws StateError when
// the pool was built for a different model.
std::vector<ScoredResponse> Retrieve(
    const std::vector<Utterance>& history, const std::string& keyword,
    const ResponsePool& pool, const RetrievalModel& model,
    const EmbeddingStore& store, std::size_t top_k,
    const std::function<bool(const Utterance&)>& filter = {});

struct PreparedRetrievalData;

class RetrievalTrainer {
 public:
  RetrievalTrainer(const std::vector<RetrievalExample>& examples,
                   const EmbeddingStore& store, std::uint64_t keyword_seed,
                   std::size_t history_turns = 2);
  ~RetrievalTrainer();

  std::size_t size() const;
  // Mean binary cross-entropy over every (gold, negative) candidate of the
  // batch; `grad`, when given, is overwritten with its gradient.
  double Loss(const RetrievalModel& model,
              const std::vector<std::size_t>& batch,
              RetrievalModel* grad) const;
  RetrievalModel Train(const TrainConfig& config, RetrievalModel init,
                       TrainTrace* trace = nullptr) const;

 private:
  std::unique_ptr<PreparedRetrievalData> data_;
};

// Each training example is conditioned on one of its gold keywords, drawn
// once with `config.seed`.
RetrievalModel TrainRetrieval(const std::vector<RetrievalExample>& examples,
                              const EmbeddingStore& store,
                              const TrainConfig& config, RetrievalModel init,
                              TrainTrace* trace = nullptr);

}  // namespace tgc

#endif  // TGC_RETRIEVAL_H_
