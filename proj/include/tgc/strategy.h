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
#ifndef TGC_STRATEGY_H_
#define TGC_STRATEGY_H_

// Target-guided keyword selection. Every keyword the agent commits to must be
// strictly closer to the target than any keyword it committed to before;
// the threshold starts at the best closeness among the human's opening
// keywords.

#include <optional>
#include <string>
#include <vector>

#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/random.h"
#include "tgc/transition.h"

namespace tgc {

struct StrategyState {
  std::string target;
  double best_closeness = 0.0;  // non-decreasing over a session
};

// Threshold is the max closeness of `opening_keywords`, or 0 when empty.
StrategyState SeedStrategy(const std::string& target,
                           const Keywords& opening_keywords,
                           const EmbeddingStore& store);

struct Candidate {
  std::string keyword;
  double closeness = 0.0;
  // Vocabulary id, or nullopt for a target that is not a vocabulary keyword.
  std::optional<std::size_t> id;
};

// Vocabulary keywords with closeness strictly above the threshold, in
// vocabulary order, followed by the target itself when it is not a
// vocabulary keyword and has not been reached.
std::vector<Candidate> CandidateSet(const StrategyState& state,
                                    const KeywordVocab& vocab,
                                    const EmbeddingStore& store);

enum class SelectionMode { kArgmax, kSample };

SelectionMode ParseSelectionMode(const std::string& name);

// Picks among `candidates` using `dist` (over vocabulary ids). Argmax breaks
// probability ties by higher closeness, then lexicographically. Sampling
// renormalizes over the candidates and falls back to uniform when they all
// have zero mass. Returns nullopt when `candidates` is empty.
std::optional<Candidate> ChooseKeyword(const KeywordDistribution& dist,
                                       const std::vector<Candidate>& candidates,
                                       SelectionMode mode, Rng& rng);

// Commits to `chosen`. Throws ContractError unless it is strictly closer to
// the target than the current threshold.
StrategyState Advance(const StrategyState& state, const std::string& chosen,
                      const EmbeddingStore& store);

// Vocabulary keyword closest to the target; used when no candidate remains.
// Throws ValidationError on an empty vocabulary.
Candidate FallbackKeyword(const StrategyState& state, const KeywordVocab& vocab,
                          const EmbeddingStore& store);

}  // namespace tgc

#endif  // TGC_STRATEGY_H_
