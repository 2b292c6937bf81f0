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
#ifndef TGC_POS_TAGGER_H_
#define TGC_POS_TAGGER_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tgc {

// Coarse part-of-speech classes, the only distinction keyword scoring needs.
enum class PosClass { kNoun, kVerb, kAdjective, kOther };

std::string_view PosClassName(PosClass pos);
PosClass ParsePosClass(std::string_view name);

// Lexicon-plus-suffix tagger over lowercased tokens.
//
// Lookup order: explicit lexicon entry, closed-class word list (pronouns,
// determiners, auxiliaries, prepositions, conjunctions, common adverbs),
// non-alphabetic token, suffix heuristics, then noun.
class PosTagger {
 public:
  PosTagger();

  PosClass Tag(std::string_view token) const;
  std::vector<PosClass> Tag(const std::vector<std::string>& tokens) const;

  // Overrides or extends the built-in lexicon.
  void AddEntry(std::string token, PosClass pos);

  // Reads `token<TAB>class` lines, class one of noun|verb|adjective|other.
  void LoadLexicon(const std::string& path);

 private:
  std::unordered_map<std::string, PosClass> lexicon_;
};

}  // namespace tgc

#endif  // TGC_POS_TAGGER_H_
