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
#ifndef TGC_EVAL_H_
#define TGC_EVAL_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgc/agent.h"
#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/retrieval.h"
#include "tgc/transition.h"

namespace tgc {

inline constexpr std::array<std::size_t, 3> kRecallCutoffs = {1, 3, 5};

// Next-keyword prediction against the whole vocabulary.
struct KeywordMetrics {
  std::array<double, 3> rw_at{};  // at kRecallCutoffs
  double p_at_1 = 0.0;
  // Cosine between the top-1 keyword and the normalized mean of the gold
  // keyword vectors.
  double cor = 0.0;
  std::size_t examples = 0;
  std::size_t skipped = 0;  // no gold keyword in the vocabulary
};

// Recall of each example is |top-K and gold| / |gold|. Throws
// ValidationError when no example has an in-vocabulary gold keyword.
KeywordMetrics EvalKeywordPrediction(
    const TransitionPredictor& predictor,
    const std::vector<TransitionExample>& examples,
    const EmbeddingStore& store, Rng& rng);

// Response selection among one gold and its negatives.
struct RetrievalMetrics {
  std::array<double, 3> r_at{};  // at kRecallCutoffs
  double mrr = 0.0;
  std::size_t examples = 0;
};

// 1-based rank of scores[0] (the gold). Negatives that tie the gold are
// ranked ahead of it.
std::size_t GoldRank(const std::vector<double>& scores);

// `scores[i][0]` is the gold's score in example i.
RetrievalMetrics EvalRankings(const std::vector<std::vector<double>>& scores);

RetrievalMetrics EvalRetrieval(const RetrievalModel& model,
                               const EmbeddingStore& store,
                               const std::vector<RetrievalExample>& examples);

nlohmann::json KeywordMetricsToJson(const KeywordMetrics& m);
nlohmann::json RetrievalMetricsToJson(const RetrievalMetrics& m);

// Aligned table: one row per system; either metric group may be absent.
struct TurnReportRow {
  std::string system;
  std::optional<KeywordMetrics> keyword;
  std::optional<RetrievalMetrics> retrieval;
};
std::string FormatTurnTable(const std::vector<TurnReportRow>& rows);

// ---------------------------------------------------------------------------
// Self-play

// Keywords of `corpus` that occur at least `min_count` times, sorted.
std::vector<std::string> TargetPool(const Corpus& corpus,
                                    std::size_t min_count = 5);
// First utterance of every conversation.
std::vector<std::string> OpeningPool(const Corpus& corpus);

struct RunRecord {
  std::string target;
  std::string opening;
  std::string outcome;  // "succeeded", "failed" or "error"
  std::size_t turns = 0;
  std::string error;
  std::vector<std::string> transcript;
  std::vector<std::string> chosen_keywords;
};

struct SimulationReport {
  std::string agent;
  std::uint64_t seed = 0;
  std::size_t max_turns = 0;
  std::size_t n_runs = 0;
  std::size_t successes = 0;
  std::size_t errors = 0;
  double succ_rate = 0.0;
  double avg_turns = 0.0;  // over successful runs; 0 without any
  std::vector<RunRecord> runs;
};

struct SelfPlayConfig {
  AgentConfig agent;  // agent.seed is ignored; every run derives its own
  std::size_t n_runs = 200;
  std::uint64_t seed = 1;
  // Redraw the target and opening when the opening already hits the target.
  std::size_t max_redraws = 100;
};

// The unconditioned retrieval model plays the target-blind human. Runs are
// seeded independently, so a report depends only on the inputs.
SimulationReport SelfPlay(const AgentResources& resources,
                          const SelfPlayConfig& config,
                          const std::vector<std::string>& targets,
                          const std::vector<std::string>& openings);

nlohmann::json SimulationReportToJson(const SimulationReport& r,
                                      bool include_runs = true);
std::string FormatSimulationTable(const std::vector<SimulationReport>& reports);

}  // namespace tgc

#endif  // TGC_EVAL_H_
