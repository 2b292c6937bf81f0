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
#ifndef TGC_CORPUS_H_
#define TGC_CORPUS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tgc/pos_tagger.h"
#include "tgc/random.h"

namespace tgc {

using Keywords = std::vector<std::string>;

enum class Speaker { kA, kB };

struct Utterance {
  Speaker speaker = Speaker::kA;
  std::vector<std::string> tokens;  // lowercased
  Keywords keywords;
  // True when the keyword list came from the data file rather than from
  // extraction; annotated utterances are left alone by AnnotateCorpus.
  bool annotated = false;

  std::string Text() const;
};

// Lowercases and splits on whitespace.
std::vector<std::string> Tokenize(std::string_view text);
Utterance MakeUtterance(Speaker speaker, std::string_view text,
                        Keywords keywords = {}, bool annotated = false);

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
};

struct Corpus {
  std::vector<Conversation> conversations;

  std::size_t NumUtterances() const;
  bool empty() const { return conversations.empty(); }
};

// Checks the structural invariants: at least two utterances, strictly
// alternating speakers, non-empty token lists. Throws ValidationError naming
// the conversation.
void ValidateConversation(const Conversation& conv);

// One JSON object per line:
//   {"id": "...", "utterances": [{"speaker": "A", "text": "...",
//                                 "keywords": ["..."]}, ...]}
// `keywords` is optional per utterance. Blank lines are skipped.
Corpus LoadCorpus(const std::string& path);
Corpus ParseCorpus(std::istream& in);
void SaveCorpus(const Corpus& corpus, const std::string& path);
void WriteCorpus(const Corpus& corpus, std::ostream& out);

// Every utterance is one document.
//   TF(w, u)  = count(w in u) / |u|
//   IDF(w)    = log(total_docs / (1 + doc_freq(w)))
//   TFIDF     = TF * IDF
class TfIdfStats {
 public:
  static TfIdfStats Compute(const Corpus& corpus);

  std::size_t total_docs() const { return total_docs_; }
  std::size_t DocFreq(const std::string& word) const;
  std::size_t WordCount(const std::string& word) const;
  double Idf(const std::string& word) const;

  // TF-IDF of every distinct word in `tokens`.
  std::map<std::string, double> TermScores(
      const std::vector<std::string>& tokens) const;
  double TermScore(const std::vector<std::string>& tokens,
                   const std::string& word) const;

  const std::unordered_map<std::string, std::size_t>& doc_freq() const {
    return doc_freq_;
  }
  const std::unordered_map<std::string, std::size_t>& word_counts() const {
    return word_counts_;
  }

 private:
  std::unordered_map<std::string, std::size_t> doc_freq_;
  std::unordered_map<std::string, std::size_t> word_counts_;
  std::size_t total_docs_ = 0;
};

struct ExtractorConfig {
  double threshold = 0.08;
  std::size_t min_word_count = 10;
  double noun_weight = 2.0;
  double verb_weight = 1.0;
  double adjective_weight = 0.5;
  double other_weight = 0.0;

  double Weight(PosClass pos) const;

  // Reads {"threshold": .., "min_word_count": .., "pos_weights":
  // {"noun": .., "verb": .., "adjective": .., "other": ..}}; absent keys keep
  // their defaults.
  static ExtractorConfig FromJsonFile(const std::string& path);
  static ExtractorConfig FromJsonText(const std::string& text);
};

// Scores each token by TF-IDF times its part-of-speech weight and keeps the
// ones at or above the threshold. Words seen fewer than min_word_count times
// in the corpus and words present in `prev` are dropped. Output follows
// utterance order without duplicates.
Keywords ExtractKeywords(const std::vector<std::string>& tokens,
                         const std::vector<std::string>* prev,
                         const TfIdfStats& stats,
                         const std::vector<PosClass>& pos_tags,
                         const ExtractorConfig& config);

// Fills keywords for every utterance that was not annotated in the source
// file. Returns the number of utterances annotated.
std::size_t AnnotateCorpus(Corpus& corpus, const TfIdfStats& stats,
                           const PosTagger& tagger,
                           const ExtractorConfig& config);

// Lexicographically ordered keyword set with dense ids.
class KeywordVocab {
 public:
  KeywordVocab() = default;
  explicit KeywordVocab(std::vector<std::string> words);

  static KeywordVocab Build(const Corpus& corpus);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::optional<std::size_t> Find(const std::string& word) const;
  bool Contains(const std::string& word) const { return Find(word).has_value(); }
  // Throws LookupError when absent.
  std::size_t Id(const std::string& word) const;
  const std::string& Word(std::size_t id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TransitionExample {
  std::vector<Keywords> history_keywords;  // turns 1..t-1
  Keywords current_keywords;               // turn t-1
  Keywords next_keywords;                  // turn t (gold)
};

struct TransitionExamples {
  std::vector<TransitionExample> examples;
  std::size_t skipped = 0;  // turns whose gold keyword list was empty
};

// One example per turn t >= 2 with a non-empty keyword list. When `vocab` is
// given, gold keywords outside it are dropped before the emptiness check and
// context keywords outside it are dropped too.
TransitionExamples DeriveTransitionExamples(
    const Corpus& corpus, const KeywordVocab* vocab = nullptr);

// Flat, index-addressable view of every utterance in a corpus.
class UtterancePool {
 public:
  explicit UtterancePool(const Corpus& corpus);

  std::size_t size() const { return items_.size(); }
  const Utterance& at(std::size_t i) const { return *items_[i]; }

 private:
  std::vector<const Utterance*> items_;
};

// Draws n distinct pool utterances uniformly, never one whose text equals
// the gold response. Throws ValidationError when fewer than n remain.
std::vector<Utterance> SampleNegatives(const UtterancePool& pool,
                                       const Utterance& gold, std::size_t n,
                                       Rng& rng);

struct RetrievalExample {
  std::vector<Utterance> history;
  Utterance gold_response;
  Keywords gold_keywords;
  std::vector<Utterance> negatives;
};

inline constexpr std::size_t kDefaultNegatives = 19;

// One example per turn t >= 2 of each conversation, negatives drawn from
// `pool`. History keeps the last `history_turns` utterances.
std::vector<RetrievalExample> BuildRetrievalExamples(
    const Corpus& corpus, const UtterancePool& pool, Rng& rng,
    std::size_t num_negatives = kDefaultNegatives,
    std::size_t history_turns = 2);

}  // namespace tgc

#endif  // TGC_CORPUS_H_
