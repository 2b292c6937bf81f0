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
#include <set>
#include <sstream>

#include "test_world.h"
#include "tgc/corpus.h"
#include "tgc/error.h"

namespace tgc {
namespace {

using testing::KeywordConversation;
using testing::MakeConversation;

Corpus Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseCorpus(in);
}

TEST(Tokenize, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(Tokenize("  Hi\tThere\nFRIEND  "),
            (std::vector<std::string>{"hi", "there", "friend"}));
  EXPECT_TRUE(Tokenize(" \t ").empty());
}

TEST(ParseCorpus, MinimalLine) {
  const Corpus c = Parse(
      R"({"id":"c1","utterances":[{"speaker":"A","text":"hi there"},{"speaker":"B","text":"hello"}]})");
  ASSERT_EQ(c.conversations.size(), 1u);
  EXPECT_EQ(c.conversations[0].id, "c1");
  ASSERT_EQ(c.conversations[0].utterances.size(), 2u);
  EXPECT_EQ(c.conversations[0].utterances[0].Text(), "hi there");
  EXPECT_FALSE(c.conversations[0].utterances[0].annotated);
}

TEST(ParseCorpus, KeywordsMarkUtteranceAnnotated) {
  const Corpus c = Parse(
      R"({"id":"c1","utterances":[{"speaker":"A","text":"i like dogs","keywords":["dogs"]},{"speaker":"B","text":"me too","keywords":[]}]})");
  const auto& u = c.conversations[0].utterances;
  EXPECT_TRUE(u[0].annotated);
  EXPECT_EQ(u[0].keywords, Keywords{"dogs"});
  EXPECT_TRUE(u[1].annotated);
  EXPECT_TRUE(u[1].keywords.empty());
}

TEST(ParseCorpus, EmptyInputGivesEmptyCorpus) {
  EXPECT_TRUE(Parse("").empty());
  EXPECT_TRUE(Parse("\n   \n").empty());
}

TEST(ParseCorpus, MalformedLineReportsLineNumber) {
  const std::string good =
      R"({"id":"c1","utterances":[{"speaker":"A","text":"a"},{"speaker":"B","text":"b"}]})";
  try {
    Parse(good + "\n\n{not json\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseCorpus, MissingFieldIsParseError) {
  try {
    Parse(R"({"utterances":[]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseCorpus, NonAlternatingSpeakersNameTheConversation) {
  try {
    Parse(
        R"({"id":"conv-7","utterances":[{"speaker":"A","text":"a"},{"speaker":"A","text":"b"}]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("conv-7"), std::string::npos);
  }
}

TEST(ValidateConversation, RejectsShortAndEmpty) {
  EXPECT_THROW(ValidateConversation(MakeConversation("x", {"one"})),
               ValidationError);
  Conversation c = MakeConversation("y", {"one", "two"});
  c.utterances[1].tokens.clear();
  EXPECT_THROW(ValidateConversation(c), ValidationError);
}

TEST(SaveCorpus, RoundTrips) {
  testing::ScratchDir dir("corpus");
  Corpus c;
  c.conversations.push_back(MakeConversation("a", {"hello there", "hi you"}));
  c.conversations[0].utterances[1].keywords = {"you"};
  SaveCorpus(c, dir.file("c.jsonl"));
  const Corpus back = LoadCorpus(dir.file("c.jsonl"));
  ASSERT_EQ(back.conversations.size(), 1u);
  EXPECT_EQ(back.conversations[0].utterances[0].Text(), "hello there");
  EXPECT_EQ(back.conversations[0].utterances[1].keywords, Keywords{"you"});
  EXPECT_EQ(back.conversations[0].utterances[1].speaker, Speaker::kB);
}

TEST(LoadCorpus, MissingFileIsParseError) {
  EXPECT_THROW(LoadCorpus("/nonexistent/corpus.jsonl"), ParseError);
}

// ---------------------------------------------------------------------------
// TF-IDF

TEST(TfIdf, SingleWordDocumentsHaveZeroIdf) {
  Corpus c;
  Conversation conv = MakeConversation("x", {"cat", "dog"});
  c.conversations.push_back(conv);
  const auto stats = TfIdfStats::Compute(c);
  EXPECT_DOUBLE_EQ(stats.Idf("cat"), 0.0);
  EXPECT_DOUBLE_EQ(stats.TermScore({"cat"}, "cat"), 0.0);
}

TEST(TfIdf, WordInEveryDocumentIsNeverAKeyword) {
  Corpus c;
  c.conversations.push_back(
      MakeConversation("x", {"the cat", "the dog", "the bird", "the fish"}));
  const auto stats = TfIdfStats::Compute(c);
  EXPECT_LE(stats.Idf("the"), 0.0);
  ExtractorConfig cfg;
  cfg.min_word_count = 1;
  cfg.threshold = 1e-9;
  PosTagger tagger;
  tagger.AddEntry("the", PosClass::kNoun);
  for (const auto& conv : c.conversations) {
    for (const auto& u : conv.utterances) {
      const auto kws = ExtractKeywords(u.tokens, nullptr, stats,
                                       tagger.Tag(u.tokens), cfg);
      EXPECT_EQ(std::count(kws.begin(), kws.end(), "the"), 0);
    }
  }
}

// Brute-force recount straight from the definitions.
TEST(TfIdf, MatchesBruteForceRecount) {
  Rng rng(42);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    std::vector<std::vector<std::string>> docs;
    for (int conv = 0; conv < 5; ++conv) {
      Conversation cv;
      cv.id = std::to_string(conv);
      const std::size_t n_utts = 2 + UniformIndex(rng, 8);
      for (std::size_t i = 0; i < n_utts; ++i) {
        Utterance u;
        u.speaker = i % 2 ? Speaker::kB : Speaker::kA;
        const std::size_t len = 1 + UniformIndex(rng, 6);
        for (std::size_t t = 0; t < len; ++t) {
          u.tokens.push_back(words[UniformIndex(rng, words.size())]);
        }
        docs.push_back(u.tokens);
        cv.utterances.push_back(u);
      }
      c.conversations.push_back(cv);
    }
    const auto stats = TfIdfStats::Compute(c);
    ASSERT_EQ(stats.total_docs(), docs.size());
    for (const auto& doc : docs) {
      for (const auto& w : words) {
        std::size_t df = 0;
        for (const auto& d : docs) {
          bool has = false;
          for (const auto& t : d) has = has || t == w;
          df += has ? 1 : 0;
        }
        std::size_t tf_count = 0;
        for (const auto& t : doc) tf_count += t == w ? 1 : 0;
        const double expected =
            (static_cast<double>(tf_count) / doc.size()) *
            std::log(static_cast<double>(docs.size()) / (1.0 + df));
        EXPECT_NEAR(stats.TermScore(doc, w), expected, 1e-12);
        if (tf_count > 0) {
          EXPECT_NEAR(stats.TermScores(doc).at(w), expected, 1e-12);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Keyword extraction

// Four documents; "river" appears once in a three-token utterance:
// score = 2 (noun) * 1/3 * log(4 / 2) = 0.4621.
class RiverFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    Corpus c;
    c.conversations.push_back(MakeConversation(
        "r", {"the river flows", "the sky", "the sun", "a moon"}));
    stats_ = TfIdfStats::Compute(c);
    tagger_.AddEntry("river", PosClass::kNoun);
    tagger_.AddEntry("flows", PosClass::kVerb);
    cfg_.min_word_count = 1;
  }
  Keywords Extract(const std::vector<std::string>& tokens,
                   const std::vector<std::string>* prev = nullptr) const {
    return ExtractKeywords(tokens, prev, stats_, tagger_.Tag(tokens), cfg_);
  }
  TfIdfStats stats_;
  PosTagger tagger_;
  ExtractorConfig cfg_;
};

TEST_F(RiverFixture, ThresholdDecidesRiver) {
  const double score = 2.0 * (1.0 / 3.0) * std::log(2.0);
  const std::vector<std::string> u = {"the", "river", "flows"};
  EXPECT_NEAR(stats_.TermScore(u, "river") * 2.0, score, 1e-12);
  cfg_.threshold = 0.3;
  EXPECT_EQ(Extract(u), Keywords{"river"});  // flows: 0.231 < 0.3
  cfg_.threshold = 0.5;
  EXPECT_TRUE(Extract(u).empty());
  cfg_.threshold = 0.2;
  EXPECT_EQ(Extract(u), (Keywords{"river", "flows"}));
}

TEST_F(RiverFixture, ZeroWeightNeverExtracted) {
  tagger_.AddEntry("river", PosClass::kOther);
  cfg_.threshold = 1e-9;
  EXPECT_EQ(Extract({"the", "river", "flows"}), Keywords{"flows"});
}

TEST_F(RiverFixture, PreviousUtteranceWordsDropped) {
  cfg_.threshold = 0.2;
  const std::vector<std::string> prev = {"a", "river"};
  EXPECT_EQ(Extract({"the", "river", "flows"}, &prev), Keywords{"flows"});
}

TEST_F(RiverFixture, RareWordsDropped) {
  cfg_.threshold = 0.2;
  cfg_.min_word_count = 2;
  EXPECT_TRUE(Extract({"the", "river", "flows"}).empty());
}

TEST_F(RiverFixture, DuplicatesCollapsedInOrder) {
  cfg_.threshold = 0.01;
  const auto kws = Extract({"flows", "river", "flows", "river"});
  EXPECT_EQ(kws, (Keywords{"flows", "river"}));
}

TEST_F(RiverFixture, MisalignedTagsRejected) {
  EXPECT_THROW(ExtractKeywords({"the", "river"}, nullptr, stats_,
                               {PosClass::kNoun}, cfg_),
               ValidationError);
}

TEST(ExtractKeywords, SubsetAndMonotoneInThreshold) {
  const auto& w = testing::SmallWorld();
  const auto stats = TfIdfStats::Compute(w.data.train);
  const PosTagger tagger;
  for (const auto& conv : w.data.test.conversations) {
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
      const auto& u = conv.utterances[i];
      const auto* prev = i ? &conv.utterances[i - 1].tokens : nullptr;
      const auto tags = tagger.Tag(u.tokens);
      Keywords last;
      bool first = true;
      for (double th : {0.0, 0.04, 0.08, 0.16, 0.32, 1.0}) {
        ExtractorConfig cfg;
        cfg.threshold = th;
        const auto kws = ExtractKeywords(u.tokens, prev, stats, tags, cfg);
        for (const auto& k : kws) {
          EXPECT_NE(std::find(u.tokens.begin(), u.tokens.end(), k),
                    u.tokens.end());
          if (prev) {
            EXPECT_EQ(std::find(prev->begin(), prev->end(), k), prev->end());
          }
          if (!first) {
            EXPECT_NE(std::find(last.begin(), last.end(), k), last.end())
                << "raising the threshold added " << k;
          }
        }
        last = kws;
        first = false;
      }
    }
  }
}

TEST(ExtractorConfig, PartialJsonKeepsDefaults) {
  const auto c = ExtractorConfig::FromJsonText(
      R"({"threshold": 0.2, "pos_weights": {"verb": 3}})");
  EXPECT_DOUBLE_EQ(c.threshold, 0.2);
  EXPECT_EQ(c.min_word_count, 10u);
  EXPECT_DOUBLE_EQ(c.noun_weight, 2.0);
  EXPECT_DOUBLE_EQ(c.verb_weight, 3.0);
  EXPECT_DOUBLE_EQ(c.adjective_weight, 0.5);
  EXPECT_DOUBLE_EQ(c.other_weight, 0.0);
  EXPECT_THROW(ExtractorConfig::FromJsonText("{oops"), ParseError);
}

TEST(AnnotateCorpus, KeepsShippedAnnotations) {
  Corpus c;
  c.conversations.push_back(MakeConversation("x", {"river flows", "river"}));
  c.conversations[0].utterances[1].keywords = {"given"};
  c.conversations[0].utterances[1].annotated = true;
  const auto stats = TfIdfStats::Compute(c);
  EXPECT_EQ(AnnotateCorpus(c, stats, PosTagger(), ExtractorConfig()), 1u);
  EXPECT_EQ(c.conversations[0].utterances[1].keywords, Keywords{"given"});
}

// ---------------------------------------------------------------------------
// Vocabulary and examples

TEST(KeywordVocab, SortedUnion) {
  Corpus c;
  c.conversations.push_back(KeywordConversation("x", {{"b"}, {"a"}, {"a", "c"}}));
  const auto v = KeywordVocab::Build(c);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(v.Id("a"), 0u);
  EXPECT_EQ(v.Id("c"), 2u);
  EXPECT_THROW(v.Id("z"), LookupError);
  EXPECT_FALSE(v.Contains("z"));
}

TEST(KeywordVocab, EmptyAnnotationsGiveEmptyVocab) {
  Corpus c;
  c.conversations.push_back(KeywordConversation("x", {{}, {}}));
  EXPECT_TRUE(KeywordVocab::Build(c).empty());
}

TEST(DeriveTransitionExamples, ThreeTurns) {
  Corpus c;
  c.conversations.push_back(KeywordConversation("x", {{"a"}, {"b"}, {"c"}}));
  const auto r = DeriveTransitionExamples(c);
  ASSERT_EQ(r.examples.size(), 2u);
  EXPECT_EQ(r.examples[0].history_keywords, std::vector<Keywords>{{"a"}});
  EXPECT_EQ(r.examples[0].current_keywords, Keywords{"a"});
  EXPECT_EQ(r.examples[0].next_keywords, Keywords{"b"});
  EXPECT_EQ(r.examples[1].history_keywords,
            (std::vector<Keywords>{{"a"}, {"b"}}));
  EXPECT_EQ(r.examples[1].current_keywords, Keywords{"b"});
  EXPECT_EQ(r.examples[1].next_keywords, Keywords{"c"});
  EXPECT_EQ(r.skipped, 0u);
}

TEST(DeriveTransitionExamples, EmptyGoldSkippedAndCounted) {
  Corpus c;
  c.conversations.push_back(
      KeywordConversation("x", {{"a"}, {}, {"c"}, {"d", "zz"}}));
  const auto r = DeriveTransitionExamples(c);
  EXPECT_EQ(r.examples.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_TRUE(r.examples[0].current_keywords.empty());

  const KeywordVocab vocab({"a", "c", "d"});
  const auto f = DeriveTransitionExamples(c, &vocab);
  ASSERT_EQ(f.examples.size(), 2u);
  EXPECT_EQ(f.examples[1].next_keywords, Keywords{"d"});
}

TEST(DeriveTransitionExamples, CountMatchesRecount) {
  const auto& w = testing::SmallWorld();
  std::size_t expected = 0;
  for (const auto& conv : w.data.train.conversations) {
    for (std::size_t t = 1; t < conv.utterances.size(); ++t) {
      expected += conv.utterances[t].keywords.empty() ? 0 : 1;
    }
  }
  EXPECT_EQ(DeriveTransitionExamples(w.data.train).examples.size(), expected);
}

TEST(SampleNegatives, ForcedByExclusion) {
  Corpus c;
  std::vector<std::string> texts;
  for (int i = 0; i < 20; ++i) texts.push_back("utt " + std::to_string(i));
  c.conversations.push_back(MakeConversation("x", texts));
  const UtterancePool pool(c);
  const Utterance gold = pool.at(7);
  Rng rng(3);
  const auto neg = SampleNegatives(pool, gold, 19, rng);
  std::set<std::string> seen;
  for (const auto& u : neg) seen.insert(u.Text());
  EXPECT_EQ(seen.size(), 19u);
  EXPECT_EQ(seen.count(gold.Text()), 0u);
  Rng rng2(3);
  EXPECT_THROW(SampleNegatives(pool, gold, 20, rng2), ValidationError);
}

TEST(SampleNegatives, DeterministicAndNeverGold) {
  const auto& w = testing::SmallWorld();
  const UtterancePool pool(w.data.train);
  for (std::size_t i = 0; i < 50; ++i) {
    const Utterance& gold = pool.at(i * 7 % pool.size());
    Rng a(i), b(i);
    const auto x = SampleNegatives(pool, gold, 19, a);
    const auto y = SampleNegatives(pool, gold, 19, b);
    ASSERT_EQ(x.size(), 19u);
    for (std::size_t k = 0; k < x.size(); ++k) {
      EXPECT_EQ(x[k].Text(), y[k].Text());
      EXPECT_NE(x[k].tokens, gold.tokens);
    }
  }
}

TEST(BuildRetrievalExamples, OnePerLaterTurn) {
  const auto& w = testing::SmallWorld();
  const UtterancePool pool(w.data.train);
  Rng rng(5);
  const auto ex = BuildRetrievalExamples(w.data.train, pool, rng, 19, 2);
  std::size_t expected = 0;
  for (const auto& conv : w.data.train.conversations) {
    expected += conv.utterances.size() - 1;
  }
  ASSERT_EQ(ex.size(), expected);
  for (const auto& e : ex) {
    EXPECT_EQ(e.negatives.size(), 19u);
    EXPECT_GE(e.history.size(), 1u);
    EXPECT_LE(e.history.size(), 2u);
    EXPECT_EQ(e.gold_keywords, e.gold_response.keywords);
  }
}

}  // namespace
}  // namespace tgc
