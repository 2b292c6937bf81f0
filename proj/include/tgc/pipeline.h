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
#ifndef TGC_PIPELINE_H_
#define TGC_PIPELINE_H_

// Glue for training every model from one corpus and wiring the results into
// agent resources, in memory or through a model directory:
//
//   <dir>/pmi.json  kernel.json  neural.json
//   <dir>/retrieval_keyword.json  retrieval_base.json

#include <memory>
#include <string>

#include "tgc/agent.h"
#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/optimizer.h"
#include "tgc/pos_tagger.h"
#include "tgc/retrieval.h"
#include "tgc/transition.h"

namespace tgc {

inline TrainConfig AdamConfig() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  return c;
}

struct PipelineConfig {
  TrainConfig transition;
  TrainConfig retrieval = AdamConfig();
  std::size_t neural_hidden = 200;
  std::size_t retrieval_hidden = 200;
  std::size_t negatives = kDefaultNegatives;
  std::size_t history_turns = 2;
  std::uint64_t seed = 1;
};

struct TrainedModels {
  KeywordVocab vocab;
  PmiTable pmi;
  KernelModel kernel;
  NeuralModel neural;
  RetrievalModel keyword_model;
  RetrievalModel base_model;
  TrainTrace kernel_trace;
  TrainTrace neural_trace;
  TrainTrace keyword_trace;
  TrainTrace base_trace;
};

// `train` must already carry keywords.
TrainedModels TrainAll(const Corpus& train, const EmbeddingStore& store,
                       const PipelineConfig& config);

void SaveModels(const TrainedModels& models, const std::string& dir);
// Vocabulary comes from `train`; every file must match it.
TrainedModels LoadModels(const std::string& dir, const Corpus& train);

// Response pools hold the deduplicated utterances of `train`.
AgentResources AssembleResources(const Corpus& train,
                                 std::shared_ptr<const EmbeddingStore> store,
                                 const TrainedModels& models,
                                 const std::string& similarity = "embedding",
                                 const ExtractorConfig& extractor = {},
                                 const PosTagger& tagger = {});

}  // namespace tgc

#endif  // TGC_PIPELINE_H_
