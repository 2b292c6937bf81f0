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
#include "tgc/strategy.h"

#include <algorithm>

#include "tgc/error.h"

namespace tgc {

StrategyState SeedStrategy(const std::string& target,
                           const Keywords& opening_keywords,
                           const EmbeddingStore& store) {
  StrategyState s;
  s.target = target;
  if (opening_keywords.empty()) return s;
  s.best_closeness = -1.0;
  for (const auto& k : opening_keywords) {
    s.best_closeness = std::max(s.best_closeness, Closeness(k, target, store));
  }
  return s;
}

std::vector<Candidate> CandidateSet(const StrategyState& state,
                                    const KeywordVocab& vocab,
                                    const EmbeddingStore& store) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double c = Closeness(vocab.Word(i), state.target, store);
    if (c > state.best_closeness) out.push_back({vocab.Word(i), c, i});
  }
  if (!vocab.Contains(state.target)) {
    const double c = Closeness(state.target, state.target, store);
    if (c > state.best_closeness) out.push_back({state.target, c, std::nullopt});
  }
  return out;
}

SelectionMode ParseSelectionMode(const std::string& name) {
  if (name == "argmax") return SelectionMode::kArgmax;
  if (name == "sample") return SelectionMode::kSample;
  throw ValidationError("unknown selection mode '" + name + "'");
}

std::optional<Candidate> ChooseKeyword(const KeywordDistribution& dist,
                                       const std::vector<Candidate>& candidates,
                                       SelectionMode mode, Rng& rng) {
  if (candidates.empty()) return std::nullopt;
  auto prob = [&](const Candidate& c) {
    return c.id && *c.id < dist.probs.size() ? dist.probs[*c.id] : 0.0;
  };
  if (mode == SelectionMode::kSample) {
    std::vector<double> weights;
    weights.reserve(candidates.size());
    for (const auto& c : candidates) weights.push_back(prob(c));
    return candidates[SampleIndex(rng, weights)];
  }
  const Candidate* best = &candidates.front();
  for (const auto& c : candidates) {
    const double pc = prob(c), pb = prob(*best);
    if (pc != pb) {
      if (pc > pb) best = &c;
    } else if (c.closeness != best->closeness) {
      if (c.closeness > best->closeness) best = &c;
    } else if (c.keyword < best->keyword) {
      best = &c;
    }
  }
  return *best;
}

StrategyState Advance(const StrategyState& state, const std::string& chosen,
                      const EmbeddingStore& store) {
  const double c = Closeness(chosen, state.target, store);
  if (!(c > state.best_closeness)) {
    throw ContractError("keyword '" + chosen + "' (closeness " +
                        std::to_string(c) + ") does not move closer than " +
                        std::to_string(state.best_closeness));
  }
  StrategyState next = state;
  next.best_closeness = c;
  return next;
}

Candidate FallbackKeyword(const StrategyState& state, const KeywordVocab& vocab,
                          const EmbeddingStore& store) {
  if (vocab.empty()) throw ValidationError("fallback: empty vocabulary");
  Candidate best{vocab.Word(0), Closeness(vocab.Word(0), state.target, store),
                 0};
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    const double c = Closeness(vocab.Word(i), state.target, store);
    if (c > best.closeness) best = {vocab.Word(i), c, i};
  }
  return best;
}

}  // namespace tgc
