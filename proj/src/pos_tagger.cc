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
#include "tgc/pos_tagger.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tgc/error.h"

namespace tgc {
namespace {

constexpr std::string_view kClosedClass[] = {
    // pronouns
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself",
    "he", "him", "his", "himself", "she", "her", "hers", "herself", "it",
    "its", "itself", "we", "us", "our", "ours", "they", "them", "their",
    "theirs", "who", "whom", "whose", "what", "which", "this", "that", "these",
    "those", "someone", "anyone", "everyone", "somebody", "anybody", "i'm",
    "i've", "i'll", "i'd", "you're", "you've", "it's", "that's", "he's",
    "she's", "we're", "they're", "there's", "what's", "let's",
    // determiners and quantifiers
    "a", "an", "the", "some", "any", "no", "every", "each", "all", "both",
    "few", "many", "much", "more", "most", "other", "another", "such", "lot",
    "lots",
    // auxiliaries and modals
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "done", "will", "would",
    "shall", "should", "can", "could", "may", "might", "must", "don't",
    "doesn't", "didn't", "can't", "won't", "isn't", "aren't", "wasn't",
    "haven't", "not", "n't", "'s", "'m", "'re", "'ve", "'ll", "'d",
    // prepositions and conjunctions
    "in", "on", "at", "by", "for", "with", "about", "against", "between",
    "into", "through", "during", "before", "after", "above", "below", "to",
    "from", "up", "down", "out", "off", "over", "under", "of", "as", "than",
    "and", "but", "or", "nor", "so", "yet", "if", "because", "while",
    "though", "although", "until", "since", "when", "where", "why", "how",
    // adverbs and interjections
    "very", "too", "also", "just", "really", "only", "then", "there", "here",
    "now", "again", "still", "even", "ever", "never", "always", "often",
    "sometimes", "well", "yes", "no", "yeah", "oh", "hi", "hello", "hey",
    "ok", "okay", "wow", "cool", "please", "thanks", "thank", "not",
    "actually", "maybe", "probably", "pretty", "quite", "almost"};

constexpr std::string_view kVerbs[] = {
    "like", "love", "enjoy", "want", "get", "got", "go", "went", "going",
    "make", "made", "know", "knew", "think", "thought", "see", "saw", "say",
    "said", "tell", "told", "take", "took", "come", "came", "give", "gave",
    "find", "found", "feel", "felt", "try", "work", "live", "play", "sing",
    "eat", "ate", "read", "watch", "listen", "ride", "rode", "swim", "walk",
    "run", "cook", "travel", "dance", "draw", "paint", "write", "wrote",
    "learn", "teach", "hate", "need", "hope", "wish", "sound", "sounds",
    "keep", "use", "buy"};

constexpr std::string_view kAdjectives[] = {
    "good", "great", "nice", "bad", "new", "old", "big", "small", "little",
    "long", "short", "high", "low", "young", "happy", "sad", "favorite",
    "fun", "busy", "tired", "hot", "cold", "warm", "cool", "best", "better",
    "worse", "worst", "fine", "sure", "real", "true", "free", "full",
    "easy", "hard", "fast", "slow", "black", "white", "red", "blue", "green",
    "soft", "kind", "glad", "sorry", "awesome"};

constexpr std::string_view kIngNouns[] = {
    "thing", "things", "something", "nothing", "anything", "everything",
    "morning", "evening", "king", "ring", "spring", "wedding", "ceiling",
    "building", "clothing", "meeting", "string", "wing", "sibling", "pudding"};

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool IsAlphabetic(std::string_view s) {
  bool any_alpha = false;
  for (char c : s) {
    if (c >= 'a' && c <= 'z') {
      any_alpha = true;
    } else if (c != '\'' && c != '-') {
      return false;
    }
  }
  return any_alpha;
}

}  // namespace

std::string_view PosClassName(PosClass pos) {
  switch (pos) {
    case PosClass::kNoun:
      return "noun";
    case PosClass::kVerb:
      return "verb";
    case PosClass::kAdjective:
      return "adjective";
    case PosClass::kOther:
      return "other";
  }
  return "other";
}

PosClass ParsePosClass(std::string_view name) {
  if (name == "noun") return PosClass::kNoun;
  if (name == "verb") return PosClass::kVerb;
  if (name == "adjective" || name == "adj") return PosClass::kAdjective;
  if (name == "other") return PosClass::kOther;
  throw ValidationError("unknown part-of-speech class '" + std::string(name) +
                        "'");
}

PosTagger::PosTagger() {
  for (auto w : kClosedClass) lexicon_.emplace(w, PosClass::kOther);
  for (auto w : kVerbs) lexicon_.emplace(w, PosClass::kVerb);
  for (auto w : kAdjectives) lexicon_.emplace(w, PosClass::kAdjective);
  for (auto w : kIngNouns) lexicon_.emplace(w, PosClass::kNoun);
}

PosClass PosTagger::Tag(std::string_view token) const {
  if (auto it = lexicon_.find(std::string(token)); it != lexicon_.end()) {
    return it->second;
  }
  if (!IsAlphabetic(token) || token.size() < 2) return PosClass::kOther;
  if (token.size() > 4 && (EndsWith(token, "ing") || EndsWith(token, "ed"))) {
    return PosClass::kVerb;
  }
  if (token.size() > 3 && EndsWith(token, "ly")) return PosClass::kOther;
  for (std::string_view suffix :
       {"ous", "ful", "ive", "able", "ible", "ical", "less", "ish"}) {
    if (token.size() > suffix.size() + 2 && EndsWith(token, suffix)) {
      return PosClass::kAdjective;
    }
  }
  return PosClass::kNoun;
}

std::vector<PosClass> PosTagger::Tag(
    const std::vector<std::string>& tokens) const {
  std::vector<PosClass> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(Tag(t));
  return out;
}

void PosTagger::AddEntry(std::string token, PosClass pos) {
  lexicon_.insert_or_assign(std::move(token), pos);
}

void PosTagger::LoadLexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lexicon " + path, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string token, cls;
    if (!(fields >> token >> cls)) {
      throw ParseError("expected '<token> <class>'", line_no);
    }
    try {
      AddEntry(std::move(token), ParsePosClass(cls));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

}  // namespace tgc
