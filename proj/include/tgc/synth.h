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
#ifndef TGC_SYNTH_H_
#define TGC_SYNTH_H_

// Small generated chat corpus with matching word vectors, for tests and
// offline experiments.
//
// Topics sit on a ring. Each conversation drifts around the ring one step at
// a time, and every utterance mentions nouns of its current topic inside
// function-word templates. Noun vectors mix a ring position, a per-topic
// direction and per-word noise, so closeness falls off with ring distance.

#include <cstdint>
#include <string>
#include <vector>

#include "tgc/corpus.h"
#include "tgc/embed.h"

namespace tgc::synth {

struct SynthConfig {
  std::size_t topics = 12;  // at most kMaxTopics
  std::size_t nouns_per_topic = 10;
  std::size_t train_conversations = 400;
  std::size_t test_conversations = 60;
  std::size_t min_turns = 6;
  std::size_t max_turns = 10;
  double stay_prob = 0.3;  // chance a turn keeps the current topic
  std::size_t dim = 32;
  double ring_weight = 1.0;
  double topic_weight = 0.6;
  double noise_weight = 0.5;
  std::uint64_t seed = 7;
};

inline constexpr std::size_t kMaxTopics = 12;
inline constexpr std::size_t kMaxNounsPerTopic = 10;

struct SynthData {
  Corpus train;
  Corpus test;
  EmbeddingStore store{1};
  std::vector<std::vector<std::string>> topic_nouns;
};

// Keywords are left unannotated; run the extractor over the result.
SynthData Generate(const SynthConfig& config);

}  // namespace tgc::synth

#endif  // TGC_SYNTH_H_
