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
#include "tgc/pipeline.h"

#include <spdlog/spdlog.h>

#include <filesystem>

#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

namespace {

constexpr const char* kPmiFile = "pmi.json";
constexpr const char* kKernelFile = "kernel.json";
constexpr const char* kNeuralFile = "neural.json";
constexpr const char* kKeywordRetrievalFile = "retrieval_keyword.json";
constexpr const char* kBaseRetrievalFile = "retrieval_base.json";

std::string Join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

TrainedModels TrainAll(const Corpus& train, const EmbeddingStore& store,
                       const PipelineConfig& config) {
  TrainedModels m;
  m.vocab = KeywordVocab::Build(train);
  if (m.vocab.empty()) throw ValidationError("training corpus has no keywords");
  const auto transitions = DeriveTransitionExamples(train, &m.vocab);
  spdlog::info("{} keywords, {} transition examples ({} skipped)",
               m.vocab.size(), transitions.examples.size(),
               transitions.skipped);

  m.pmi = PmiTable::Fit(transitions.examples, m.vocab);

  TrainConfig tc = config.transition;
  tc.seed = SplitMix64(config.seed ^ 0x1);
  m.kernel = TrainKernel(transitions.examples, m.vocab, store, tc,
                         KernelModel::Default(), &m.kernel_trace);

  Rng init_rng = SubRng(config.seed, 2);
  tc.seed = SplitMix64(config.seed ^ 0x2);
  m.neural = TrainNeural(
      transitions.examples, m.vocab, store, tc,
      NeuralModel::Init(store.dim(), config.neural_hidden, m.vocab.size(),
                        init_rng),
      &m.neural_trace);

  const UtterancePool pool(train);
  Rng neg_rng = SubRng(config.seed, 3);
  const auto examples = BuildRetrievalExamples(
      train, pool, neg_rng, config.negatives, config.history_turns);
  spdlog::info("{} retrieval examples", examples.size());

  TrainConfig rc = config.retrieval;
  rc.seed = SplitMix64(config.seed ^ 0x4);
  RetrievalTrainer trainer(examples, store, rc.seed, config.history_turns);
  Rng kw_init = SubRng(config.seed, 4);
  RetrievalModel kw = RetrievalModel::Init(store.dim(), config.retrieval_hidden,
                                           true, kw_init);
  kw.history_turns = config.history_turns;
  m.keyword_model = trainer.Train(rc, std::move(kw), &m.keyword_trace);

  Rng base_init = SubRng(config.seed, 5);
  RetrievalModel base = RetrievalModel::Init(
      store.dim(), config.retrieval_hidden, false, base_init);
  base.history_turns = config.history_turns;
  m.base_model = trainer.Train(rc, std::move(base), &m.base_trace);
  return m;
}

void SaveModels(const TrainedModels& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  WriteJsonFile(m.pmi.ToJson(m.vocab), Join(dir, kPmiFile));
  WriteJsonFile(m.kernel.ToJson(), Join(dir, kKernelFile));
  WriteJsonFile(m.neural.ToJson(m.vocab), Join(dir, kNeuralFile));
  WriteJsonFile(m.keyword_model.ToJson(), Join(dir, kKeywordRetrievalFile));
  WriteJsonFile(m.base_model.ToJson(), Join(dir, kBaseRetrievalFile));
}

TrainedModels LoadModels(const std::string& dir, const Corpus& train) {
  TrainedModels m;
  m.vocab = KeywordVocab::Build(train);
  auto load = [&](const char* name, auto parse) {
    const std::string path = Join(dir, name);
    try {
      return parse(ReadJsonFile(path));
    } catch (const json::exception& e) {
      throw ParseError(path + ": " + e.what(), 0);
    }
  };
  m.pmi = load(kPmiFile, [&](const json& j) { return PmiTable::FromJson(j, m.vocab); });
  m.kernel = load(kKernelFile, [](const json& j) { return KernelModel::FromJson(j); });
  m.neural = load(kNeuralFile,
                  [&](const json& j) { return NeuralModel::FromJson(j, m.vocab); });
  m.keyword_model = load(kKeywordRetrievalFile,
                         [](const json& j) { return RetrievalModel::FromJson(j); });
  m.base_model = load(kBaseRetrievalFile,
                      [](const json& j) { return RetrievalModel::FromJson(j); });
  return m;
}

AgentResources AssembleResources(const Corpus& train,
                                 std::shared_ptr<const EmbeddingStore> store,
                                 const TrainedModels& models,
                                 const std::string& similarity,
                                 const ExtractorConfig& extractor,
                                 const PosTagger& tagger) {
  AgentResources r;
  r.store = store;
  r.vocab = models.vocab;
  r.stats = TfIdfStats::Compute(train);
  r.tagger = tagger;
  r.extractor = extractor;
  r.pmi = std::make_shared<PmiPredictor>(models.pmi, models.vocab);
  r.kernel = std::make_shared<KernelPredictor>(models.kernel, models.vocab, *store);
  r.neural = std::make_shared<NeuralPredictor>(models.neural, models.vocab, *store);
  auto utterances = UniqueUtterances(train);
  r.keyword_model = std::make_shared<RetrievalModel>(models.keyword_model);
  r.keyword_pool = std::make_shared<ResponsePool>(
      ResponsePool::Build(utterances, *r.keyword_model, *store));
  r.base_model = std::make_shared<RetrievalModel>(models.base_model);
  r.base_pool = std::make_shared<ResponsePool>(
      ResponsePool::Build(std::move(utterances), *r.base_model, *store));
  r.similarity = MakeSimilarityProvider(similarity, store);
  return r;
}

}  // namespace tgc
