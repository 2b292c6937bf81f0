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
#include "tgc/eval.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_set>

#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

KeywordMetrics EvalKeywordPrediction(
    const TransitionPredictor& predictor,
    const std::vector<TransitionExample>& examples,
    const EmbeddingStore& store, Rng& rng) {
  const KeywordVocab& vocab = predictor.vocab();
  if (vocab.empty()) throw ValidationError("predictor vocabulary is empty");
  KeywordMetrics m;
  const std::size_t dim = store.dim();
  std::vector<double> top(dim), gold(dim), v(dim);
  for (const auto& ex : examples) {
    std::unordered_set<std::size_t> golds;
    for (const auto& g : ex.next_keywords) {
      if (auto id = vocab.Find(g)) golds.insert(*id);
    }
    if (golds.empty()) {
      ++m.skipped;
      continue;
    }
    const KeywordDistribution dist = predictor.Predict(ContextOf(ex), rng);
    const auto ranked = dist.TopK(kRecallCutoffs.back());
    for (std::size_t c = 0; c < kRecallCutoffs.size(); ++c) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(kRecallCutoffs[c], ranked.size()); ++i) {
        hits += golds.count(ranked[i]);
      }
      m.rw_at[c] += static_cast<double>(hits) / static_cast<double>(golds.size());
    }
    m.p_at_1 += golds.count(ranked.front()) ? 1.0 : 0.0;

    store.Resolve(vocab.Word(ranked.front()), top);
    std::fill(gold.begin(), gold.end(), 0.0);
    for (std::size_t g : golds) {
      store.Resolve(vocab.Word(g), v);
      for (std::size_t i = 0; i < dim; ++i) gold[i] += v[i];
    }
    double dot = 0.0, nt = 0.0, ng = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      dot += top[i] * gold[i];
      nt += top[i] * top[i];
      ng += gold[i] * gold[i];
    }
    if (nt > 0.0 && ng > 0.0) {
      m.cor += std::clamp(dot / std::sqrt(nt * ng), -1.0, 1.0);
    }
    ++m.examples;
  }
  if (m.examples == 0) {
    throw ValidationError("no test example has an in-vocabulary gold keyword");
  }
  const double n = static_cast<double>(m.examples);
  for (auto& r : m.rw_at) r /= n;
  m.p_at_1 /= n;
  m.cor /= n;
  return m;
}

std::size_t GoldRank(const std::vector<double>& scores) {
  if (scores.empty()) throw ContractError("GoldRank: no scores");
  std::size_t rank = 1;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] >= scores[0]) ++rank;
  }
  return rank;
}

RetrievalMetrics EvalRankings(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) throw ValidationError("retrieval test set is empty");
  RetrievalMetrics m;
  for (const auto& s : scores) {
    const std::size_t rank = GoldRank(s);
    for (std::size_t c = 0; c < kRecallCutoffs.size(); ++c) {
      if (rank <= kRecallCutoffs[c]) m.r_at[c] += 1.0;
    }
    m.mrr += 1.0 / static_cast<double>(rank);
  }
  m.examples = scores.size();
  const double n = static_cast<double>(m.examples);
  for (auto& r : m.r_at) r /= n;
  m.mrr /= n;
  return m;
}

RetrievalMetrics EvalRetrieval(const RetrievalModel& model,
                               const EmbeddingStore& store,
                               const std::vector<RetrievalExample>& examples) {
  std::vector<std::vector<double>> scores;
  scores.reserve(examples.size());
  std::vector<Utterance> candidates;
  for (const auto& ex : examples) {
    candidates.clear();
    candidates.push_back(ex.gold_response);
    candidates.insert(candidates.end(), ex.negatives.begin(), ex.negatives.end());
    // The keyword model sees the first gold keyword, as at inference time
    // it sees the single chosen one.
    const std::string kw = ex.gold_keywords.empty() ? "" : ex.gold_keywords.front();
    scores.push_back(ScoreCandidates(model, store, ex.history, kw, candidates));
  }
  return EvalRankings(scores);
}

json KeywordMetricsToJson(const KeywordMetrics& m) {
  return {{"rw@1", m.rw_at[0]}, {"rw@3", m.rw_at[1]}, {"rw@5", m.rw_at[2]},
          {"p@1", m.p_at_1},    {"cor", m.cor},       {"examples", m.examples},
          {"skipped", m.skipped}};
}

json RetrievalMetricsToJson(const RetrievalMetrics& m) {
  return {{"r20@1", m.r_at[0]}, {"r20@3", m.r_at[1]}, {"r20@5", m.r_at[2]},
          {"mrr", m.mrr},       {"examples", m.examples}};
}

namespace {

std::string Cell(const std::optional<double>& v, int precision) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

std::string RenderTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        line += r[c] + std::string(width[c] - r[c].size(), ' ');
      } else {
        line += "  " + std::string(width[c] - r[c].size(), ' ') + r[c];
      }
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string FormatTurnTable(const std::vector<TurnReportRow>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"System", "Rw@1", "Rw@3", "Rw@5", "P@1", "Cor.", "R20@1", "R20@3",
       "R20@5", "MRR"}};
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.system};
    auto kw = [&](auto get) -> std::optional<double> {
      if (!r.keyword) return std::nullopt;
      return get(*r.keyword);
    };
    auto rt = [&](auto get) -> std::optional<double> {
      if (!r.retrieval) return std::nullopt;
      return get(*r.retrieval);
    };
    for (std::size_t c = 0; c < 3; ++c) {
      line.push_back(Cell(kw([c](const KeywordMetrics& m) { return m.rw_at[c]; }), 4));
    }
    line.push_back(Cell(kw([](const KeywordMetrics& m) { return m.p_at_1; }), 4));
    line.push_back(Cell(kw([](const KeywordMetrics& m) { return m.cor; }), 4));
    for (std::size_t c = 0; c < 3; ++c) {
      line.push_back(Cell(rt([c](const RetrievalMetrics& m) { return m.r_at[c]; }), 4));
    }
    line.push_back(Cell(rt([](const RetrievalMetrics& m) { return m.mrr; }), 4));
    cells.push_back(std::move(line));
  }
  return RenderTable(cells);
}

// ---------------------------------------------------------------------------

std::vector<std::string> TargetPool(const Corpus& corpus,
                                    std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      for (const auto& k : u.keywords) ++counts[k];
    }
  }
  std::vector<std::string> out;
  for (const auto& [k, n] : counts) {
    if (n >= min_count) out.push_back(k);
  }
  return out;
}

std::vector<std::string> OpeningPool(const Corpus& corpus) {
  std::vector<std::string> out;
  for (const auto& conv : corpus.conversations) {
    if (!conv.utterances.empty()) out.push_back(conv.utterances.front().Text());
  }
  return out;
}

namespace {

RunRecord PlayOne(const AgentResources& resources, const SelfPlayConfig& config,
                  const std::vector<std::string>& targets,
                  const std::vector<std::string>& openings, std::size_t run) {
  Rng rng = SubRng(config.seed, run);
  RunRecord rec;
  for (std::size_t draw = 0;; ++draw) {
    rec.target = targets[UniformIndex(rng, targets.size())];
    rec.opening = openings[UniformIndex(rng, openings.size())];
    Utterance u = MakeUtterance(kHumanSpeaker, rec.opening);
    u.keywords = resources.Extract(u.tokens, nullptr);
    if (!MentionsTarget(u, rec.target, *resources.similarity,
                        config.agent.achieve_threshold)) {
      break;
    }
    if (draw + 1 >= config.max_redraws) {
      throw ValidationError("every drawn opening already mentions its target");
    }
  }
  AgentConfig agent = config.agent;
  agent.seed = rng();
  try {
    Session s = StartSession("run-" + std::to_string(run), rec.target,
                             rec.opening, agent, resources);
    std::optional<std::string> human;
    while (s.status == SessionStatus::kActive) {
      AgentStep(s, human, resources);
      if (s.status != SessionStatus::kActive) break;
      human = BaseReply(s.history, resources, kHumanSpeaker,
                        agent.avoid_repeats).Text();
    }
    rec.outcome = std::string(SessionStatusName(s.status));
    rec.turns = s.turn_count;
    for (const auto& h : s.history) rec.transcript.push_back(h.Text());
    for (const auto& t : s.trace) {
      if (!t.chosen_keyword.empty()) rec.chosen_keywords.push_back(t.chosen_keyword);
    }
  } catch (const std::exception& e) {
    rec.outcome = "error";
    rec.error = e.what();
    spdlog::warn("self-play run {} failed: {}", run, e.what());
  }
  return rec;
}

}  // namespace

SimulationReport SelfPlay(const AgentResources& resources,
                          const SelfPlayConfig& config,
                          const std::vector<std::string>& targets,
                          const std::vector<std::string>& openings) {
  if (targets.empty() || openings.empty()) {
    throw ValidationError("self-play needs non-empty target and opening pools");
  }
  if (config.n_runs == 0) throw ValidationError("self-play needs n_runs >= 1");
  resources.Require(config.agent.kind);
  SimulationReport r;
  r.agent = std::string(AgentKindName(config.agent.kind));
  r.seed = config.seed;
  r.max_turns = config.agent.max_turns;
  r.n_runs = config.n_runs;
  double turns = 0.0;
  for (std::size_t run = 0; run < config.n_runs; ++run) {
    RunRecord rec = PlayOne(resources, config, targets, openings, run);
    if (rec.outcome == "succeeded") {
      ++r.successes;
      turns += static_cast<double>(rec.turns);
    } else if (rec.outcome == "error") {
      ++r.errors;
    }
    r.runs.push_back(std::move(rec));
  }
  r.succ_rate = static_cast<double>(r.successes) / static_cast<double>(r.n_runs);
  r.avg_turns = r.successes ? turns / static_cast<double>(r.successes) : 0.0;
  return r;
}

json SimulationReportToJson(const SimulationReport& r, bool include_runs) {
  json j = {{"agent", r.agent},         {"seed", r.seed},
            {"max_turns", r.max_turns}, {"n_runs", r.n_runs},
            {"successes", r.successes}, {"errors", r.errors},
            {"succ_rate", r.succ_rate}, {"avg_turns", r.avg_turns}};
  if (include_runs) {
    json runs = json::array();
    for (const auto& run : r.runs) {
      json jr = {{"target", run.target},
                 {"opening", run.opening},
                 {"outcome", run.outcome},
                 {"turns", run.turns},
                 {"chosen_keywords", run.chosen_keywords},
                 {"transcript", run.transcript}};
      if (!run.error.empty()) jr["error"] = run.error;
      runs.push_back(std::move(jr));
    }
    j["runs"] = std::move(runs);
  }
  return j;
}

std::string FormatSimulationTable(const std::vector<SimulationReport>& reports) {
  std::vector<std::vector<std::string>> cells = {
      {"System", "Succ. (%)", "#Turns", "Runs"}};
  for (const auto& r : reports) {
    cells.push_back({r.agent, Cell(100.0 * r.succ_rate, 1),
                     Cell(r.avg_turns, 2), std::to_string(r.n_runs)});
  }
  return RenderTable(cells);
}

}  // namespace tgc
