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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "test_world.h"
#include "tgc/error.h"
#include "tgc/retrieval.h"

namespace tgc {
namespace {

// tanh(W mean(x) + b) written out from the stored weights.
std::vector<double> ManualFeature(const std::vector<std::string>& tokens,
                                  const Encoder& e,
                                  const EmbeddingStore& store) {
  std::vector<double> mean(store.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& t : tokens) {
    if (t == kTurnSeparator) continue;
    const auto v = store.Resolve(t);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    ++n;
  }
  if (n > 0) {
    for (auto& x : mean) x /= static_cast<double>(n);
  }
  std::vector<double> f(e.out);
  for (std::size_t r = 0; r < e.out; ++r) {
    double z = e.b[r];
    for (std::size_t c = 0; c < e.in; ++c) z += e.w[r * e.in + c] * mean[c];
    f[r] = std::tanh(z);
  }
  return f;
}

double ManualScore(const RetrievalModel& m, const EmbeddingStore& store,
                   const std::vector<Utterance>& history,
                   const std::string& keyword, const Utterance& cand) {
  const auto h = ManualFeature(HistoryTokens(history, m.history_turns),
                               m.history, store);
  const auto c = ManualFeature(cand.tokens, m.candidate, store);
  double z = m.final_b;
  for (std::size_t i = 0; i < m.hidden; ++i) z += m.final_w[i] * h[i] * c[i];
  if (m.keyword_conditioned) {
    const auto k = ManualFeature({keyword}, m.keyword, store);
    for (std::size_t i = 0; i < m.hidden; ++i) {
      z += m.final_w[m.hidden + i] * k[i] * c[i];
    }
  }
  return 1.0 / (1.0 + std::exp(-z));
}

RetrievalModel RandomModel(std::size_t dim, std::size_t hidden, bool kw,
                           std::uint64_t seed) {
  Rng rng(seed);
  auto m = RetrievalModel::Init(dim, hidden, kw, rng);
  testing::RandomizeParams(m, rng, 0.7);
  return m;
}

TEST(HistoryTokens, KeepsLastTurnsWithSeparators) {
  const std::vector<Utterance> h = {MakeUtterance(Speaker::kA, "a b"),
                                    MakeUtterance(Speaker::kB, "c"),
                                    MakeUtterance(Speaker::kA, "d e")};
  EXPECT_EQ(HistoryTokens(h, 2),
            (std::vector<std::string>{"c", kTurnSeparator, "d", "e"}));
  EXPECT_EQ(HistoryTokens(h, 1), (std::vector<std::string>{"d", "e"}));
  EXPECT_TRUE(HistoryTokens({}, 2).empty());
}

TEST(Retrieval, ScoresMatchManualForwardPass) {
  const auto toy = testing::MakeToyRetrieval();
  for (bool kw : {true, false}) {
    const auto m = RandomModel(toy.store.dim(), 6, kw, kw ? 1 : 2);
    for (std::size_t e = 0; e < 5; ++e) {
      const auto& ex = toy.examples[e];
      std::vector<Utterance> cands = {ex.gold_response};
      cands.insert(cands.end(), ex.negatives.begin(), ex.negatives.end());
      const auto probs = ScoreCandidates(m, toy.store, ex.history,
                                         ex.gold_keywords[0], cands);
      ASSERT_EQ(probs.size(), cands.size());
      for (std::size_t i = 0; i < cands.size(); ++i) {
        EXPECT_NEAR(probs[i],
                    ManualScore(m, toy.store, ex.history, ex.gold_keywords[0],
                                cands[i]),
                    1e-12);
      }
    }
  }
}

TEST(Retrieval, GradientMatchesFiniteDifferences) {
  const auto toy = testing::MakeToyRetrieval(12, 5);
  const RetrievalTrainer trainer(toy.examples, toy.store, 3, 2);
  const std::vector<std::size_t> batch = {0, 7, 19, 30};
  for (bool kw : {true, false}) {
    for (std::uint64_t draw = 0; draw < 10; ++draw) {
      const auto m = RandomModel(toy.store.dim(), 4, kw, 100 + draw);
      RetrievalModel grad;
      trainer.Loss(m, batch, &grad);
      const auto check = testing::CheckGradient(
          m, grad, [&](const RetrievalModel& p) {
            return trainer.Loss(p, batch, nullptr);
          });
      EXPECT_GT(check.checked, 0u);
      EXPECT_LT(check.max_rel_error, testing::kGradRelTolerance)
          << "kw=" << kw << " draw=" << draw;
    }
  }
}

TEST(Retrieval, LearnsSeparableToyRanking) {
  const auto toy = testing::MakeToyRetrieval();
  auto config = AdamConfig();
  config.epochs = 50;
  config.anneal_epochs = 50;
  config.lr_initial = 0.1;
  config.lr_final = 0.01;
  config.seed = 4;
  Rng rng(8);
  const auto init = RetrievalModel::Init(toy.store.dim(), 16, true, rng);
  const RetrievalTrainer trainer(toy.examples, toy.store, config.seed, 2);
  std::vector<std::size_t> all(trainer.size());
  std::iota(all.begin(), all.end(), 0);
  const double before = trainer.Loss(init, all, nullptr);
  TrainTrace trace;
  const auto model = trainer.Train(config, init, &trace);
  EXPECT_EQ(trace.epoch_loss.size(), 50u);
  EXPECT_LE(trainer.Loss(model, all, nullptr), 0.7 * before);
  std::size_t hits = 0;
  for (const auto& ex : toy.examples) {
    std::vector<Utterance> cands = {ex.gold_response};
    cands.insert(cands.end(), ex.negatives.begin(), ex.negatives.end());
    const auto probs = ScoreCandidates(model, toy.store, ex.history,
                                       ex.gold_keywords[0], cands);
    hits += testing::PessimisticGoldRank(probs) == 1;
  }
  EXPECT_GE(static_cast<double>(hits) / toy.examples.size(), 0.8);
}

TEST(Retrieve, MatchesExhaustiveRescoring) {
  const auto& w = testing::SmallWorld();
  const auto& model = *w.resources->keyword_model;
  const auto& pool = *w.resources->keyword_pool;
  const auto& conv = w.data.test.conversations[0];
  const std::vector<Utterance> history(conv.utterances.begin(),
                                       conv.utterances.begin() + 2);
  const std::string keyword = w.models.vocab.Word(1);
  const auto top = Retrieve(history, keyword, pool, model, *w.store, 15);
  ASSERT_EQ(top.size(), 15u);
  std::vector<ScoredResponse> all;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    all.push_back(
        {i, ManualScore(model, *w.store, history, keyword, pool.at(i))});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.prob > b.prob;
  });
  for (std::size_t i = 0; i < top.size(); ++i) {
    EXPECT_NEAR(top[i].prob, all[i].prob, 1e-9);
    if (i + 1 < top.size()) {
      EXPECT_GE(top[i].prob, top[i + 1].prob);
    }
  }
}

TEST(Retrieve, TiesGoToLowerPoolIndexAndFilterApplies) {
  const auto toy = testing::MakeToyRetrieval();
  const auto m = RandomModel(toy.store.dim(), 6, true, 5);
  // Same tokens in different order give identical features.
  const std::vector<Utterance> utts = {
      MakeUtterance(Speaker::kA, "my t100 like"),
      MakeUtterance(Speaker::kA, "i like my t100"),
      MakeUtterance(Speaker::kA, "like my t100"),
      MakeUtterance(Speaker::kA, "t100 my like")};
  const auto pool = ResponsePool::Build(utts, m, toy.store);
  const auto top = Retrieve({utts[1]}, "t101", pool, m, toy.store, 4);
  ASSERT_EQ(top.size(), 4u);
  std::vector<std::size_t> tied;
  for (const auto& s : top) {
    if (s.index != 1) tied.push_back(s.index);
  }
  EXPECT_EQ(tied, (std::vector<std::size_t>{0, 2, 3}));
  const auto filtered =
      Retrieve({utts[1]}, "t101", pool, m, toy.store, 4,
               [](const Utterance& u) { return u.tokens.size() == 3; });
  EXPECT_EQ(filtered.size(), 3u);
  for (const auto& s : filtered) EXPECT_NE(s.index, 1u);
  EXPECT_THROW(Retrieve({}, "t101", pool, m, toy.store, 0), ContractError);
}

TEST(ResponsePool, CacheRoundTripAndStaleModel) {
  const auto& w = testing::SmallWorld();
  const auto& model = *w.resources->base_model;
  const auto& pool = *w.resources->base_pool;
  testing::ScratchDir dir("pool");
  pool.SaveCache(dir.file("base"));
  const auto loaded = ResponsePool::LoadCache(dir.file("base"));
  ASSERT_EQ(loaded.size(), pool.size());
  EXPECT_EQ(loaded.model_fingerprint(), model.Fingerprint());
  for (std::size_t i = 0; i < pool.size(); i += 7) {
    EXPECT_EQ(loaded.at(i).Text(), pool.at(i).Text());
    EXPECT_EQ(loaded.at(i).keywords, pool.at(i).keywords);
    for (std::size_t d = 0; d < pool.hidden(); ++d) {
      EXPECT_NEAR(loaded.Feature(i)[d], pool.Feature(i)[d], 1e-6);
    }
  }
  const auto history = std::vector<Utterance>{pool.at(0)};
  EXPECT_NO_THROW(Retrieve(history, "", loaded, model, *w.store, 3));
  auto changed = model;
  changed.final_b += 0.25;
  EXPECT_THROW(Retrieve(history, "", loaded, changed, *w.store, 3),
               StateError);
}

TEST(ResponsePool, UniqueUtterancesKeepFirstOccurrence) {
  Corpus c;
  c.conversations.push_back(testing::MakeConversation("a", {"x y", "z"}));
  c.conversations.push_back(testing::MakeConversation("b", {"z", "x y", "w"}));
  const auto u = UniqueUtterances(c);
  ASSERT_EQ(u.size(), 3u);
  EXPECT_EQ(u[0].Text(), "x y");
  EXPECT_EQ(u[1].Text(), "z");
  EXPECT_EQ(u[2].Text(), "w");
}

TEST(RetrievalModel, JsonRoundTripKeepsFingerprint) {
  const auto m = RandomModel(8, 3, true, 9);
  const auto back = RetrievalModel::FromJson(m.ToJson());
  EXPECT_EQ(back.Fingerprint(), m.Fingerprint());
  auto j = m.ToJson();
  j["version"] = 2;
  EXPECT_THROW(RetrievalModel::FromJson(j), ValidationError);
}

TEST(RetrievalModel, SharedEncoderInitialization) {
  Rng rng(4);
  const auto m = RetrievalModel::Init(8, 3, true, rng);
  EXPECT_EQ(m.history.w, m.candidate.w);
  EXPECT_EQ(m.keyword.w, m.candidate.w);
  for (double x : m.final_w) EXPECT_EQ(x, 0.0);
  const auto base = RetrievalModel::Init(8, 3, false, rng);
  EXPECT_EQ(base.final_w.size(), 3u);
  EXPECT_TRUE(base.keyword.w.empty());
}

}  // namespace
}  // namespace tgc
