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
#ifndef TGC_AGENT_H_
#define TGC_AGENT_H_

// One target-guided conversation. Each agent step runs
//
//   extract human keywords -> achievement check -> candidate keywords ->
//   keyword distribution -> keyword choice -> response retrieval ->
//   achievement check -> strategy update
//
// against shared, immutable models.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tgc/corpus.h"
#include "tgc/embed.h"
#include "tgc/pos_tagger.h"
#include "tgc/random.h"
#include "tgc/retrieval.h"
#include "tgc/strategy.h"
#include "tgc/transition.h"

namespace tgc {

inline constexpr Speaker kHumanSpeaker = Speaker::kA;
inline constexpr Speaker kAgentSpeaker = Speaker::kB;

// ---------------------------------------------------------------------------
// Target achievement

class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual std::string_view name() const = 0;
  // Symmetric score; higher means more similar.
  virtual double Similarity(const std::string& a,
                            const std::string& b) const = 0;
};

// Lowercase, one trailing "s" removed.
std::string NormalizeKeyword(std::string_view word);

// 1 for equal normalized forms, otherwise 0.
class ExactSimilarity : public SimilarityProvider {
 public:
  std::string_view name() const override { return "exact"; }
  double Similarity(const std::string& a, const std::string& b) const override;
};

class EmbeddingSimilarity : public SimilarityProvider {
 public:
  explicit EmbeddingSimilarity(std::shared_ptr<const EmbeddingStore> store)
      : store_(std::move(store)) {}
  std::string_view name() const override { return "embedding"; }
  double Similarity(const std::string& a, const std::string& b) const override;

 private:
  std::shared_ptr<const EmbeddingStore> store_;
};

// Scores computed offline (e.g. from a lexical database). File format: one
// `word_a word_b score` triple per line; '#' starts a comment. Unlisted pairs
// score 0.
class PairScoreSimilarity : public SimilarityProvider {
 public:
  static PairScoreSimilarity Load(const std::string& path);
  void Set(const std::string& a, const std::string& b, double score);
  std::string_view name() const override { return "pairs"; }
  double Similarity(const std::string& a, const std::string& b) const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::unordered_map<std::string, double> scores_;
};

// "exact", "embedding" or "pairs:<path>".
std::shared_ptr<const SimilarityProvider> MakeSimilarityProvider(
    const std::string& name, std::shared_ptr<const EmbeddingStore> store);

inline constexpr double kDefaultAchieveThreshold = 0.9;

// True when a keyword equals the target after normalization or the provider
// scores the pair above `threshold`. Throws ValidationError unless
// 0 < threshold <= 1.
bool TargetAchieved(const Keywords& keywords, const std::string& target,
                    const SimilarityProvider& provider,
                    double threshold = kDefaultAchieveThreshold);

// TargetAchieved over the utterance's keywords, also counting any token that
// names the target.
bool MentionsTarget(const Utterance& u, const std::string& target,
                    const SimilarityProvider& provider,
                    double threshold = kDefaultAchieveThreshold);

// ---------------------------------------------------------------------------
// Agents

enum class AgentKind { kRetrieval, kRetrievalStgy, kPmi, kNeural, kKernel,
                       kRandom };

std::string_view AgentKindName(AgentKind kind);
// Throws ValidationError for unknown names.
AgentKind ParseAgentKind(std::string_view name);
const std::vector<AgentKind>& AllAgentKinds();
// Every agent except the plain retrieval baseline follows the strategy.
inline bool UsesStrategy(AgentKind kind) { return kind != AgentKind::kRetrieval; }

struct AgentConfig {
  AgentKind kind = AgentKind::kKernel;
  std::size_t max_turns = 8;
  SelectionMode selection = SelectionMode::kArgmax;
  double achieve_threshold = kDefaultAchieveThreshold;
  std::uint64_t seed = 1;
  // Skip pool responses already present in the conversation.
  bool avoid_repeats = true;
};

// Models and statistics shared by every session. Not modified by sessions.
struct AgentResources {
  std::shared_ptr<const EmbeddingStore> store;
  KeywordVocab vocab;
  TfIdfStats stats;
  PosTagger tagger;
  ExtractorConfig extractor;

  std::shared_ptr<const TransitionPredictor> pmi;
  std::shared_ptr<const TransitionPredictor> neural;
  std::shared_ptr<const TransitionPredictor> kernel;

  // Keyword-conditioned retrieval, used by the transition-model agents.
  std::shared_ptr<const RetrievalModel> keyword_model;
  std::shared_ptr<const ResponsePool> keyword_pool;
  // Unconditioned retrieval, used by both retrieval agents and by the
  // simulated human.
  std::shared_ptr<const RetrievalModel> base_model;
  std::shared_ptr<const ResponsePool> base_pool;

  std::shared_ptr<const SimilarityProvider> similarity;

  // Throws StateError when something `kind` needs is missing.
  void Require(AgentKind kind) const;
  // Keywords of `tokens`, with `prev` as the preceding utterance.
  Keywords Extract(const std::vector<std::string>& tokens,
                   const std::vector<std::string>* prev) const;
};

enum class SessionStatus { kActive, kSucceeded, kFailed };
std::string_view SessionStatusName(SessionStatus s);

struct ScoredKeyword {
  std::string keyword;
  double prob = 0.0;
};

struct TurnTrace {
  std::optional<std::string> human_text;
  Keywords human_keywords;
  bool human_achieved = false;
  Keywords current_keywords;  // context handed to the transition model
  double threshold = 0.0;     // closeness to beat before this turn
  std::vector<Candidate> candidates;
  std::vector<ScoredKeyword> top_keywords;  // ten most probable
  std::string chosen_keyword;               // empty without strategy
  double chosen_closeness = 0.0;
  bool fallback = false;  // chosen outside the candidate set
  bool greeting = false;  // target-blind opener, not an agent turn
  std::optional<std::string> response;
  std::optional<std::size_t> response_index;  // into the response pool
  Keywords response_keywords;
  bool achieved = false;
};

struct Session {
  std::string id;
  std::string target;
  AgentConfig config;
  std::vector<Utterance> history;
  StrategyState strategy;
  bool strategy_seeded = false;
  std::size_t turn_count = 0;  // agent turns
  SessionStatus status = SessionStatus::kActive;
  std::vector<TurnTrace> trace;
  Keywords current_keywords;
  Rng rng;
};

// Throws LookupError when the store cannot resolve `target` and StateError
// when `resources` lack a model the agent needs. An opening utterance is
// taken as the human's first turn and seeds the strategy; when it already
// mentions the target the session starts out succeeded.
Session StartSession(std::string id, const std::string& target,
                     const std::optional<std::string>& opening,
                     const AgentConfig& config,
                     const AgentResources& resources);

struct StepResult {
  std::optional<Utterance> response;  // absent when the human hit the target
  TurnTrace trace;
};

// Advances `session` by one agent turn. `human` may be absent only on an
// empty history, in which case the agent opens with a greeting: the base
// model's reply to nothing, skipping utterances that mention the target. The
// greeting neither counts as a turn nor seeds the strategy; the human's first
// utterance does. Throws StateError when the session is finished.
StepResult AgentStep(Session& session, const std::optional<std::string>& human,
                     const AgentResources& resources);

// Target-blind reply from the unconditioned retrieval model; stands in for
// the human during self-play.
Utterance BaseReply(const std::vector<Utterance>& history,
                    const AgentResources& resources, Speaker speaker,
                    bool avoid_repeats = true);

nlohmann::json TurnTraceToJson(const TurnTrace& t);
nlohmann::json SessionToJson(const Session& s);

}  // namespace tgc

#endif  // TGC_AGENT_H_
