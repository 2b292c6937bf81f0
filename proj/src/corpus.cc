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
#include "tgc/corpus.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

std::string Utterance::Text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Utterance MakeUtterance(Speaker speaker, std::string_view text,
                        Keywords keywords, bool annotated) {
  Utterance u;
  u.speaker = speaker;
  u.tokens = Tokenize(text);
  u.keywords = std::move(keywords);
  u.annotated = annotated;
  return u;
}

std::size_t Corpus::NumUtterances() const {
  std::size_t n = 0;
  for (const auto& c : conversations) n += c.utterances.size();
  return n;
}

void ValidateConversation(const Conversation& conv) {
  if (conv.utterances.size() < 2) {
    throw ValidationError("conversation '" + conv.id +
                          "' has fewer than 2 utterances");
  }
  for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
    if (conv.utterances[i].tokens.empty()) {
      throw ValidationError("conversation '" + conv.id + "' utterance " +
                            std::to_string(i) + " is empty");
    }
    if (i > 0 && conv.utterances[i].speaker == conv.utterances[i - 1].speaker) {
      throw ValidationError("conversation '" + conv.id +
                            "' has non-alternating speakers at utterance " +
                            std::to_string(i));
    }
  }
}

namespace {

Speaker ParseSpeaker(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "A" || s == "a") return Speaker::kA;
  if (s == "B" || s == "b") return Speaker::kB;
  throw ValidationError("speaker must be \"A\" or \"B\", got \"" + s + "\"");
}

Conversation ParseConversation(const std::string& line) {
  const json j = json::parse(line);
  Conversation conv;
  conv.id = j.at("id").get<std::string>();
  for (const auto& ju : j.at("utterances")) {
    Utterance u;
    u.speaker = ParseSpeaker(ju.at("speaker"));
    u.tokens = Tokenize(ju.at("text").get<std::string>());
    if (auto it = ju.find("keywords"); it != ju.end() && !it->is_null()) {
      u.keywords = it->get<Keywords>();
      u.annotated = true;
    }
    conv.utterances.push_back(std::move(u));
  }
  return conv;
}

}  // namespace

Corpus ParseCorpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    Conversation conv;
    try {
      conv = ParseConversation(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    ValidateConversation(conv);
    corpus.conversations.push_back(std::move(conv));
  }
  if (corpus.empty()) spdlog::warn("corpus is empty");
  return corpus;
}

Corpus LoadCorpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file " + path, 0);
  return ParseCorpus(in);
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& conv : corpus.conversations) {
    json j;
    j["id"] = conv.id;
    json utts = json::array();
    for (const auto& u : conv.utterances) {
      utts.push_back({{"speaker", u.speaker == Speaker::kA ? "A" : "B"},
                      {"text", u.Text()},
                      {"keywords", u.keywords}});
    }
    j["utterances"] = std::move(utts);
    out << j.dump() << '\n';
  }
}

void SaveCorpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file " + path);
  WriteCorpus(corpus, out);
}

// ---------------------------------------------------------------------------

TfIdfStats TfIdfStats::Compute(const Corpus& corpus) {
  TfIdfStats stats;
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      ++stats.total_docs_;
      std::unordered_set<std::string_view> seen;
      for (const auto& t : u.tokens) {
        ++stats.word_counts_[t];
        if (seen.insert(t).second) ++stats.doc_freq_[t];
      }
    }
  }
  return stats;
}

std::size_t TfIdfStats::DocFreq(const std::string& word) const {
  auto it = doc_freq_.find(word);
  return it == doc_freq_.end() ? 0 : it->second;
}

std::size_t TfIdfStats::WordCount(const std::string& word) const {
  auto it = word_counts_.find(word);
  return it == word_counts_.end() ? 0 : it->second;
}

double TfIdfStats::Idf(const std::string& word) const {
  if (total_docs_ == 0) return 0.0;
  return std::log(static_cast<double>(total_docs_) /
                  (1.0 + static_cast<double>(DocFreq(word))));
}

std::map<std::string, double> TfIdfStats::TermScores(
    const std::vector<std::string>& tokens) const {
  std::map<std::string, double> scores;
  if (tokens.empty()) return scores;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  const double len = static_cast<double>(tokens.size());
  for (const auto& [w, c] : counts) {
    scores[w] = (static_cast<double>(c) / len) * Idf(w);
  }
  return scores;
}

double TfIdfStats::TermScore(const std::vector<std::string>& tokens,
                             const std::string& word) const {
  if (tokens.empty()) return 0.0;
  const auto c = std::count(tokens.begin(), tokens.end(), word);
  return (static_cast<double>(c) / static_cast<double>(tokens.size())) *
         Idf(word);
}

// ---------------------------------------------------------------------------

double ExtractorConfig::Weight(PosClass pos) const {
  switch (pos) {
    case PosClass::kNoun:
      return noun_weight;
    case PosClass::kVerb:
      return verb_weight;
    case PosClass::kAdjective:
      return adjective_weight;
    case PosClass::kOther:
      return other_weight;
  }
  return 0.0;
}

ExtractorConfig ExtractorConfig::FromJsonText(const std::string& text) {
  ExtractorConfig config;
  json j;
  try {
    j = json::parse(text);
    config.threshold = j.value("threshold", config.threshold);
    config.min_word_count = j.value("min_word_count", config.min_word_count);
    if (auto it = j.find("pos_weights"); it != j.end()) {
      config.noun_weight = it->value("noun", config.noun_weight);
      config.verb_weight = it->value("verb", config.verb_weight);
      config.adjective_weight = it->value("adjective", config.adjective_weight);
      config.other_weight = it->value("other", config.other_weight);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("extractor config: ") + e.what(), 0);
  }
  return config;
}

ExtractorConfig ExtractorConfig::FromJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open extractor config " + path, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJsonText(ss.str());
}

Keywords ExtractKeywords(const std::vector<std::string>& tokens,
                         const std::vector<std::string>* prev,
                         const TfIdfStats& stats,
                         const std::vector<PosClass>& pos_tags,
                         const ExtractorConfig& config) {
  if (pos_tags.size() != tokens.size()) {
    throw ValidationError("part-of-speech tags (" +
                          std::to_string(pos_tags.size()) +
                          ") not aligned with tokens (" +
                          std::to_string(tokens.size()) + ")");
  }
  std::unordered_set<std::string_view> excluded;
  if (prev != nullptr) excluded.insert(prev->begin(), prev->end());

  Keywords out;
  std::unordered_set<std::string_view> emitted;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& w = tokens[i];
    if (emitted.count(w) || excluded.count(w)) continue;
    if (stats.WordCount(w) < config.min_word_count) continue;
    const double weight = config.Weight(pos_tags[i]);
    if (weight <= 0.0) continue;
    const double score = stats.TermScore(tokens, w) * weight;
    if (score >= config.threshold) {
      out.push_back(w);
      emitted.insert(w);
    }
  }
  return out;
}

std::size_t AnnotateCorpus(Corpus& corpus, const TfIdfStats& stats,
                           const PosTagger& tagger,
                           const ExtractorConfig& config) {
  std::size_t n = 0;
  for (auto& conv : corpus.conversations) {
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
      auto& u = conv.utterances[i];
      if (u.annotated) continue;
      const auto* prev = i > 0 ? &conv.utterances[i - 1].tokens : nullptr;
      u.keywords = ExtractKeywords(u.tokens, prev, stats, tagger.Tag(u.tokens),
                                   config);
      ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------

KeywordVocab::KeywordVocab(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  words_ = std::move(words);
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

KeywordVocab KeywordVocab::Build(const Corpus& corpus) {
  std::set<std::string> all;
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      all.insert(u.keywords.begin(), u.keywords.end());
    }
  }
  return KeywordVocab(std::vector<std::string>(all.begin(), all.end()));
}

std::optional<std::size_t> KeywordVocab::Find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t KeywordVocab::Id(const std::string& word) const {
  auto id = Find(word);
  if (!id) throw LookupError("keyword '" + word + "' not in vocabulary");
  return *id;
}

// ---------------------------------------------------------------------------

namespace {

Keywords FilterToVocab(const Keywords& kws, const KeywordVocab* vocab) {
  if (vocab == nullptr) return kws;
  Keywords out;
  for (const auto& k : kws) {
    if (vocab->Contains(k)) out.push_back(k);
  }
  return out;
}

}  // namespace

TransitionExamples DeriveTransitionExamples(const Corpus& corpus,
                                            const KeywordVocab* vocab) {
  TransitionExamples result;
  for (const auto& conv : corpus.conversations) {
    std::vector<Keywords> history;
    for (std::size_t t = 0; t < conv.utterances.size(); ++t) {
      Keywords kws = FilterToVocab(conv.utterances[t].keywords, vocab);
      if (t > 0) {
        if (kws.empty()) {
          ++result.skipped;
        } else {
          TransitionExample ex;
          ex.history_keywords = history;
          ex.current_keywords = history.back();
          ex.next_keywords = kws;
          result.examples.push_back(std::move(ex));
        }
      }
      history.push_back(std::move(kws));
    }
  }
  return result;
}

UtterancePool::UtterancePool(const Corpus& corpus) {
  items_.reserve(corpus.NumUtterances());
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) items_.push_back(&u);
  }
}

std::vector<Utterance> SampleNegatives(const UtterancePool& pool,
                                       const Utterance& gold, std::size_t n,
                                       Rng& rng) {
  // Rejection sampling is O(n) when the pool is large; the exhaustive path
  // below only runs for small or degenerate pools.
  if (pool.size() > 4 * n) {
    std::vector<std::size_t> chosen;
    std::unordered_set<std::size_t> taken;
    for (std::size_t attempt = 0; attempt < 64 * n + 64 && chosen.size() < n;
         ++attempt) {
      const std::size_t i = UniformIndex(rng, pool.size());
      if (taken.count(i) || pool.at(i).tokens == gold.tokens) continue;
      taken.insert(i);
      chosen.push_back(i);
    }
    if (chosen.size() == n) {
      std::vector<Utterance> out;
      out.reserve(n);
      for (std::size_t i : chosen) out.push_back(pool.at(i));
      return out;
    }
  }
  std::vector<std::size_t> eligible;
  eligible.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.at(i).tokens != gold.tokens) eligible.push_back(i);
  }
  if (eligible.size() < n) {
    throw ValidationError("negative pool has " +
                          std::to_string(eligible.size()) +
                          " utterances, need " + std::to_string(n));
  }
  // Partial Fisher-Yates over the eligible indices.
  std::vector<Utterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + UniformIndex(rng, eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
    out.push_back(pool.at(eligible[i]));
  }
  return out;
}

std::vector<RetrievalExample> BuildRetrievalExamples(
    const Corpus& corpus, const UtterancePool& pool, Rng& rng,
    std::size_t num_negatives, std::size_t history_turns) {
  std::vector<RetrievalExample> out;
  for (const auto& conv : corpus.conversations) {
    for (std::size_t t = 1; t < conv.utterances.size(); ++t) {
      RetrievalExample ex;
      const std::size_t first = t > history_turns ? t - history_turns : 0;
      ex.history.assign(conv.utterances.begin() + first,
                        conv.utterances.begin() + t);
      ex.gold_response = conv.utterances[t];
      ex.gold_keywords = conv.utterances[t].keywords;
      ex.negatives = SampleNegatives(pool, ex.gold_response, num_negatives, rng);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace tgc
