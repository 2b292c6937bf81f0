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
#include "tgc/agent.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

std::string NormalizeKeyword(std::string_view word) {
  std::string out(word);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (out.size() > 1 && out.back() == 's') out.pop_back();
  return out;
}

double ExactSimilarity::Similarity(const std::string& a,
                                   const std::string& b) const {
  return NormalizeKeyword(a) == NormalizeKeyword(b) ? 1.0 : 0.0;
}

double EmbeddingSimilarity::Similarity(const std::string& a,
                                       const std::string& b) const {
  return store_->Cosine(a, b);
}

namespace {

std::string PairKey(const std::string& a, const std::string& b) {
  return a < b ? a + '\t' + b : b + '\t' + a;
}

}  // namespace

void PairScoreSimilarity::Set(const std::string& a, const std::string& b,
                              double score) {
  scores_[PairKey(a, b)] = score;
}

double PairScoreSimilarity::Similarity(const std::string& a,
                                       const std::string& b) const {
  auto it = scores_.find(PairKey(a, b));
  return it == scores_.end() ? 0.0 : it->second;
}

PairScoreSimilarity PairScoreSimilarity::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open pair score file " + path, 0);
  PairScoreSimilarity p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string a, b, extra;
    double score;
    if (!(fields >> a)) continue;
    if (!(fields >> b >> score) || (fields >> extra)) {
      throw ParseError("expected 'word word score'", lineno);
    }
    p.Set(a, b, score);
  }
  return p;
}

std::shared_ptr<const SimilarityProvider> MakeSimilarityProvider(
    const std::string& name, std::shared_ptr<const EmbeddingStore> store) {
  if (name == "exact") return std::make_shared<ExactSimilarity>();
  if (name == "embedding") {
    if (!store) throw ValidationError("embedding similarity needs embeddings");
    return std::make_shared<EmbeddingSimilarity>(std::move(store));
  }
  if (name.rfind("pairs:", 0) == 0) {
    return std::make_shared<PairScoreSimilarity>(
        PairScoreSimilarity::Load(name.substr(6)));
  }
  throw ValidationError("unknown similarity provider '" + name + "'");
}

bool TargetAchieved(const Keywords& keywords, const std::string& target,
                    const SimilarityProvider& provider, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ValidationError("achievement threshold must be in (0, 1]");
  }
  const std::string norm_target = NormalizeKeyword(target);
  for (const auto& k : keywords) {
    if (NormalizeKeyword(k) == norm_target) return true;
    if (provider.Similarity(k, target) > threshold) return true;
  }
  return false;
}

bool MentionsTarget(const Utterance& u, const std::string& target,
                    const SimilarityProvider& provider, double threshold) {
  if (TargetAchieved(u.keywords, target, provider, threshold)) return true;
  const std::string norm = NormalizeKeyword(target);
  return std::any_of(u.tokens.begin(), u.tokens.end(), [&](const auto& t) {
    return NormalizeKeyword(t) == norm;
  });
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<AgentKind, std::string_view> kAgentNames[] = {
    {AgentKind::kRetrieval, "retrieval"}, {AgentKind::kRetrievalStgy, "retrieval-stgy"},
    {AgentKind::kPmi, "pmi"},             {AgentKind::kNeural, "neural"},
    {AgentKind::kKernel, "kernel"},       {AgentKind::kRandom, "random"},
};

}  // namespace

std::string_view AgentKindName(AgentKind kind) {
  for (const auto& [k, name] : kAgentNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

AgentKind ParseAgentKind(std::string_view name) {
  for (const auto& [k, n] : kAgentNames) {
    if (n == name) return k;
  }
  throw ValidationError("unknown agent kind '" + std::string(name) + "'");
}

const std::vector<AgentKind>& AllAgentKinds() {
  static const std::vector<AgentKind> kinds = {
      AgentKind::kRetrieval, AgentKind::kRetrievalStgy, AgentKind::kPmi,
      AgentKind::kNeural,    AgentKind::kKernel,        AgentKind::kRandom};
  return kinds;
}

std::string_view SessionStatusName(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive:
      return "active";
    case SessionStatus::kSucceeded:
      return "succeeded";
    case SessionStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

void AgentResources::Require(AgentKind kind) const {
  auto missing = [kind](const char* what) {
    throw StateError(std::string(AgentKindName(kind)) + " agent needs " + what);
  };
  if (!store) missing("embeddings");
  if (!similarity) missing("a similarity provider");
  if (!base_model || !base_pool) missing("the base retrieval model");
  switch (kind) {
    case AgentKind::kRetrieval:
    case AgentKind::kRetrievalStgy:
      return;
    case AgentKind::kPmi:
      if (!pmi) missing("a PMI table");
      break;
    case AgentKind::kNeural:
      if (!neural) missing("a neural transition model");
      break;
    case AgentKind::kKernel:
      if (!kernel) missing("a kernel transition model");
      break;
    case AgentKind::kRandom:
      break;
  }
  if (!keyword_model || !keyword_pool) missing("the keyword retrieval model");
  if (vocab.empty()) missing("a keyword vocabulary");
}

Keywords AgentResources::Extract(const std::vector<std::string>& tokens,
                                 const std::vector<std::string>* prev) const {
  return ExtractKeywords(tokens, prev, stats, tagger.Tag(tokens), extractor);
}

namespace {

Keywords InVocab(const Keywords& kws, const KeywordVocab& vocab) {
  Keywords out;
  for (const auto& k : kws) {
    if (vocab.Contains(k)) out.push_back(k);
  }
  return out;
}

// Extracted keywords plus any token naming the target, so that a mention is
// not lost when the extractor scores the word below its threshold.
Keywords WithTargetMentions(Keywords kws, const std::vector<std::string>& tokens,
                            const std::string& target) {
  const std::string norm = NormalizeKeyword(target);
  for (const auto& t : tokens) {
    if (NormalizeKeyword(t) == norm &&
        std::find(kws.begin(), kws.end(), t) == kws.end()) {
      kws.push_back(t);
    }
  }
  return kws;
}

std::function<bool(const Utterance&)> RepeatFilter(
    const std::vector<Utterance>& history, bool enabled) {
  if (!enabled) return {};
  auto seen = std::make_shared<std::unordered_set<std::string>>();
  for (const auto& u : history) seen->insert(u.Text());
  return [seen](const Utterance& u) { return !seen->count(u.Text()); };
}

std::function<bool(const Utterance&)> Both(
    std::function<bool(const Utterance&)> a,
    std::function<bool(const Utterance&)> b) {
  if (!a) return b;
  if (!b) return a;
  return [a = std::move(a), b = std::move(b)](const Utterance& u) {
    return a(u) && b(u);
  };
}

// Top-1 pool entry; with every entry filtered out the filter is dropped.
ScoredResponse RetrieveOne(const std::vector<Utterance>& history,
                           const std::string& keyword, const ResponsePool& pool,
                           const RetrievalModel& model,
                           const EmbeddingStore& store,
                           const std::function<bool(const Utterance&)>& filter) {
  auto top = Retrieve(history, keyword, pool, model, store, 1, filter);
  if (top.empty()) top = Retrieve(history, keyword, pool, model, store, 1);
  return top.front();
}

}  // namespace

Session StartSession(std::string id, const std::string& target,
                     const std::optional<std::string>& opening,
                     const AgentConfig& config,
                     const AgentResources& resources) {
  resources.Require(config.kind);
  if (target.empty()) throw ValidationError("target must not be empty");
  if (config.max_turns == 0) throw ValidationError("max_turns must be >= 1");
  resources.store->Resolve(target);  // LookupError under the error policy
  Session s;
  s.id = std::move(id);
  s.target = target;
  s.config = config;
  s.rng = Rng(config.seed);
  s.strategy.target = target;
  if (opening) {
    Utterance u = MakeUtterance(kHumanSpeaker, *opening);
    u.keywords = resources.Extract(u.tokens, nullptr);
    u.annotated = true;
    s.strategy = SeedStrategy(target, u.keywords, *resources.store);
    s.strategy_seeded = true;
    s.current_keywords = InVocab(u.keywords, resources.vocab);
    if (MentionsTarget(u, target, *resources.similarity,
                       config.achieve_threshold)) {
      TurnTrace t;
      t.human_text = u.Text();
      t.human_keywords = u.keywords;
      t.human_achieved = true;
      t.achieved = true;
      t.current_keywords = s.current_keywords;
      t.threshold = s.strategy.best_closeness;
      s.trace.push_back(std::move(t));
      s.status = SessionStatus::kSucceeded;
    }
    s.history.push_back(std::move(u));
  }
  return s;
}

namespace {

StepResult Greet(Session& session, const AgentResources& resources) {
  if (!resources.base_model || !resources.base_pool) {
    throw StateError("greeting needs the base retrieval model");
  }
  const std::string& target = session.target;
  const SimilarityProvider& sim = *resources.similarity;
  const double threshold = session.config.achieve_threshold;
  // Judged on the keywords the greeting will carry, not the pool's.
  auto blind = [&](const Utterance& u) {
    Utterance probe = u;
    probe.keywords = resources.Extract(u.tokens, nullptr);
    return !MentionsTarget(probe, target, sim, threshold);
  };
  const auto picked = RetrieveOne({}, "", *resources.base_pool,
                                  *resources.base_model, *resources.store, blind);
  Utterance reply = MakeUtterance(
      kAgentSpeaker, resources.base_pool->at(picked.index).Text());
  reply.keywords = resources.Extract(reply.tokens, nullptr);
  reply.annotated = true;
  TurnTrace t;
  t.greeting = true;
  t.response = reply.Text();
  t.response_index = picked.index;
  t.response_keywords = reply.keywords;
  session.history.push_back(reply);
  session.trace.push_back(t);
  return {std::move(reply), std::move(t)};
}

}  // namespace

StepResult AgentStep(Session& session, const std::optional<std::string>& human,
                     const AgentResources& resources) {
  if (session.status != SessionStatus::kActive) {
    throw StateError("session " + session.id + " is " +
                     std::string(SessionStatusName(session.status)));
  }
  const auto& store = *resources.store;
  const AgentConfig& cfg = session.config;
  TurnTrace t;

  if (!human && session.history.empty()) return Greet(session, resources);
  if (human) {
    if (!session.history.empty() &&
        session.history.back().speaker == kHumanSpeaker) {
      throw ContractError("the agent has not replied to the last human turn");
    }
    Utterance u = MakeUtterance(kHumanSpeaker, *human);
    const auto* prev =
        session.history.empty() ? nullptr : &session.history.back().tokens;
    u.keywords = resources.Extract(u.tokens, prev);
    u.annotated = true;
    t.human_text = u.Text();
    t.human_keywords = u.keywords;
    if (!session.strategy_seeded) {
      session.strategy = SeedStrategy(session.target, u.keywords, store);
      session.strategy_seeded = true;
    }
    const Keywords current = InVocab(u.keywords, resources.vocab);
    if (!current.empty()) session.current_keywords = current;
    const Keywords mentioned =
        WithTargetMentions(u.keywords, u.tokens, session.target);
    session.history.push_back(std::move(u));
    if (TargetAchieved(mentioned, session.target, *resources.similarity,
                       cfg.achieve_threshold)) {
      t.human_achieved = true;
      t.achieved = true;
      t.current_keywords = session.current_keywords;
      t.threshold = session.strategy.best_closeness;
      session.status = SessionStatus::kSucceeded;
      session.trace.push_back(t);
      return {std::nullopt, std::move(t)};
    }
  } else if (!session.history.empty() &&
             session.history.back().speaker == kAgentSpeaker) {
    throw ContractError("a human utterance is required");
  }
  if (!session.strategy_seeded) {
    session.strategy = SeedStrategy(session.target, {}, store);
    session.strategy_seeded = true;
  }

  t.current_keywords = session.current_keywords;
  t.threshold = session.strategy.best_closeness;
  const auto repeats = RepeatFilter(session.history, cfg.avoid_repeats);
  const ResponsePool* pool = nullptr;
  ScoredResponse picked;

  if (cfg.kind == AgentKind::kRetrieval || cfg.kind == AgentKind::kRetrievalStgy) {
    pool = resources.base_pool.get();
    bool done = false;
    if (cfg.kind == AgentKind::kRetrievalStgy) {
      t.candidates = CandidateSet(session.strategy, resources.vocab, store);
      auto closeness = std::make_shared<std::unordered_map<std::string, double>>();
      for (const auto& c : t.candidates) (*closeness)[c.keyword] = c.closeness;
      auto has_candidate = [closeness](const Utterance& u) {
        for (const auto& k : u.keywords) {
          if (closeness->count(k)) return true;
        }
        return false;
      };
      auto top = Retrieve(session.history, "", *pool, *resources.base_model,
                          store, 1, Both(repeats, has_candidate));
      if (!top.empty()) {
        picked = top.front();
        // Commit to the closest candidate keyword the response carries.
        for (const auto& k : pool->at(picked.index).keywords) {
          auto it = closeness->find(k);
          if (it == closeness->end()) continue;
          if (t.chosen_keyword.empty() || it->second > t.chosen_closeness ||
              (it->second == t.chosen_closeness && k < t.chosen_keyword)) {
            t.chosen_keyword = k;
            t.chosen_closeness = it->second;
          }
        }
        session.strategy =
            Advance(session.strategy, t.chosen_keyword, store);
        done = true;
      } else {
        t.fallback = true;
      }
    }
    if (!done) {
      picked = RetrieveOne(session.history, "", *pool, *resources.base_model,
                           store, repeats);
    }
  } else {
    pool = resources.keyword_pool.get();
    t.candidates = CandidateSet(session.strategy, resources.vocab, store);
    std::optional<Candidate> choice;
    if (cfg.kind == AgentKind::kRandom) {
      if (!t.candidates.empty()) {
        choice = t.candidates[UniformIndex(session.rng, t.candidates.size())];
      }
    } else {
      const TransitionPredictor& predictor =
          cfg.kind == AgentKind::kPmi      ? *resources.pmi
          : cfg.kind == AgentKind::kNeural ? *resources.neural
                                           : *resources.kernel;
      TransitionContext ctx;
      for (const auto& u : session.history) {
        ctx.history.push_back(InVocab(u.keywords, resources.vocab));
      }
      ctx.current = session.current_keywords;
      const KeywordDistribution dist = predictor.Predict(ctx, session.rng);
      for (std::size_t id : dist.TopK(10)) {
        t.top_keywords.push_back({resources.vocab.Word(id), dist.probs[id]});
      }
      choice = ChooseKeyword(dist, t.candidates, cfg.selection, session.rng);
    }
    if (!choice) {
      choice = FallbackKeyword(session.strategy, resources.vocab, store);
      t.fallback = true;
    }
    t.chosen_keyword = choice->keyword;
    t.chosen_closeness = choice->closeness;
    picked = RetrieveOne(session.history, t.chosen_keyword, *pool,
                         *resources.keyword_model, store, repeats);
    if (!t.fallback) {
      session.strategy = Advance(session.strategy, t.chosen_keyword, store);
    }
  }

  const Utterance& chosen = pool->at(picked.index);
  Utterance reply = MakeUtterance(kAgentSpeaker, chosen.Text());
  const auto* prev =
      session.history.empty() ? nullptr : &session.history.back().tokens;
  Keywords kws = resources.Extract(reply.tokens, prev);
  if (!t.chosen_keyword.empty() &&
      std::find(kws.begin(), kws.end(), t.chosen_keyword) == kws.end()) {
    kws.push_back(t.chosen_keyword);
  }
  kws = WithTargetMentions(std::move(kws), reply.tokens, session.target);
  reply.keywords = kws;
  reply.annotated = true;
  t.response = reply.Text();
  t.response_index = picked.index;
  t.response_keywords = kws;
  t.achieved = TargetAchieved(kws, session.target, *resources.similarity,
                              cfg.achieve_threshold);
  session.history.push_back(reply);
  ++session.turn_count;
  if (t.achieved) {
    session.status = SessionStatus::kSucceeded;
  } else if (session.turn_count >= cfg.max_turns) {
    session.status = SessionStatus::kFailed;
  }
  session.trace.push_back(t);
  return {std::move(reply), std::move(t)};
}

Utterance BaseReply(const std::vector<Utterance>& history,
                    const AgentResources& resources, Speaker speaker,
                    bool avoid_repeats) {
  if (!resources.base_model || !resources.base_pool || !resources.store) {
    throw StateError("base reply needs the base retrieval model");
  }
  const auto picked =
      RetrieveOne(history, "", *resources.base_pool, *resources.base_model,
                  *resources.store, RepeatFilter(history, avoid_repeats));
  return MakeUtterance(speaker, resources.base_pool->at(picked.index).Text());
}

json TurnTraceToJson(const TurnTrace& t) {
  json candidates = json::array();
  for (const auto& c : t.candidates) {
    candidates.push_back({{"keyword", c.keyword}, {"closeness", c.closeness}});
  }
  json top = json::array();
  for (const auto& k : t.top_keywords) {
    top.push_back({{"keyword", k.keyword}, {"prob", k.prob}});
  }
  json j = {{"human_keywords", t.human_keywords},
            {"human_achieved", t.human_achieved},
            {"current_keywords", t.current_keywords},
            {"threshold", t.threshold},
            {"candidates", std::move(candidates)},
            {"top_keywords", std::move(top)},
            {"chosen_keyword", t.chosen_keyword},
            {"chosen_closeness", t.chosen_closeness},
            {"fallback", t.fallback},
            {"greeting", t.greeting},
            {"response_keywords", t.response_keywords},
            {"achieved", t.achieved}};
  j["human_text"] = t.human_text ? json(*t.human_text) : json(nullptr);
  j["response"] = t.response ? json(*t.response) : json(nullptr);
  j["response_index"] =
      t.response_index ? json(*t.response_index) : json(nullptr);
  return j;
}

json SessionToJson(const Session& s) {
  json history = json::array();
  for (const auto& u : s.history) {
    history.push_back({{"speaker", u.speaker == kHumanSpeaker ? "human" : "agent"},
                       {"text", u.Text()},
                       {"keywords", u.keywords}});
  }
  json trace = json::array();
  for (const auto& t : s.trace) trace.push_back(TurnTraceToJson(t));
  return {{"id", s.id},
          {"target", s.target},
          {"agent", AgentKindName(s.config.kind)},
          {"max_turns", s.config.max_turns},
          {"seed", s.config.seed},
          {"status", SessionStatusName(s.status)},
          {"turn_count", s.turn_count},
          {"history", std::move(history)},
          {"trace", std::move(trace)}};
}

}  // namespace tgc
