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
#include "tgc/synth.h"

#include <cmath>
#include <numbers>
#include <string_view>

#include "tgc/error.h"
#include "tgc/random.h"

namespace tgc::synth {
namespace {

constexpr std::string_view kTopicNouns[kMaxTopics][kMaxNounsPerTopic] = {
    {"guitar", "piano", "song", "band", "concert", "drum", "album", "singer",
     "violin", "radio"},
    {"soccer", "football", "tennis", "team", "coach", "stadium", "ball", "goal",
     "match", "player"},
    {"pizza", "pasta", "burger", "salad", "sandwich", "cheese", "bread", "soup",
     "taco", "dessert"},
    {"airport", "beach", "hotel", "passport", "flight", "island", "vacation",
     "luggage", "map", "train"},
    {"dog", "cat", "puppy", "kitten", "parrot", "hamster", "rabbit", "leash",
     "vet", "turtle"},
    {"teacher", "student", "homework", "exam", "classroom", "college", "lesson",
     "library", "math", "science"},
    {"movie", "film", "actor", "theater", "cinema", "popcorn", "director",
     "comedy", "horror", "sequel"},
    {"rain", "snow", "storm", "sun", "cloud", "wind", "umbrella", "thunder",
     "winter", "summer"},
    {"mom", "dad", "brother", "sister", "grandma", "uncle", "cousin", "aunt",
     "baby", "parent"},
    {"museum", "gallery", "painter", "canvas", "sculpture", "artist", "brush",
     "sketch", "poem", "poet"},
    {"computer", "phone", "laptop", "internet", "software", "robot", "app",
     "keyboard", "screen", "email"},
    {"flower", "garden", "tree", "seed", "tomato", "rose", "grass", "soil",
     "plant", "fence"},
};

// Function words only, so the nouns carry all the keyword weight.
constexpr std::string_view kTemplates[] = {
    "i have a {a}",
    "what about the {a} and the {b}",
    "my {a} is with my {b}",
    "do you have a {a} too",
    "we were at the {a} with the {b}",
    "there is a {a} here",
    "is it a {a} or a {b}",
    "oh my {a} is over there",
    "so the {a} is about the {b}",
    "yes a {a} and then a {b}",
};

std::string Fill(std::string_view tmpl, const std::string& a,
                 const std::string& b) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.substr(i, 3) == "{a}") {
      out += a;
      i += 2;
    } else if (tmpl.substr(i, 3) == "{b}") {
      out += b;
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

std::vector<double> RandomUnit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = StandardNormal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

Conversation MakeConversation(const SynthConfig& cfg,
                              const std::vector<std::vector<std::string>>& nouns,
                              Rng& rng, const std::string& id) {
  Conversation conv;
  conv.id = id;
  const std::size_t turns =
      cfg.min_turns + UniformIndex(rng, cfg.max_turns - cfg.min_turns + 1);
  std::size_t topic = UniformIndex(rng, cfg.topics);
  for (std::size_t t = 0; t < turns; ++t) {
    if (t > 0 && UniformReal(rng) >= cfg.stay_prob) {
      topic = UniformReal(rng) < 0.5 ? (topic + 1) % cfg.topics
                                     : (topic + cfg.topics - 1) % cfg.topics;
    }
    const auto& pool = nouns[topic];
    const std::size_t ia = UniformIndex(rng, pool.size());
    std::size_t ib = UniformIndex(rng, pool.size() - 1);
    if (ib >= ia) ++ib;
    const auto tmpl = kTemplates[UniformIndex(rng, std::size(kTemplates))];
    conv.utterances.push_back(MakeUtterance(t % 2 == 0 ? Speaker::kA : Speaker::kB,
                                            Fill(tmpl, pool[ia], pool[ib])));
  }
  return conv;
}

}  // namespace

SynthData Generate(const SynthConfig& cfg) {
  if (cfg.topics < 3 || cfg.topics > kMaxTopics) {
    throw ValidationError("synthetic topics must be in [3, 12]");
  }
  if (cfg.nouns_per_topic < 2 || cfg.nouns_per_topic > kMaxNounsPerTopic) {
    throw ValidationError("synthetic nouns per topic must be in [2, 10]");
  }
  if (cfg.min_turns < 2 || cfg.max_turns < cfg.min_turns) {
    throw ValidationError("synthetic turn range is invalid");
  }
  if (cfg.dim < 3) throw ValidationError("synthetic dim must be >= 3");

  Rng rng(cfg.seed);
  SynthData data;
  data.store = EmbeddingStore(cfg.dim, OovPolicy::kHashRandom, cfg.seed);
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) /
                         static_cast<double>(cfg.topics);
    const auto topic_dir = RandomUnit(rng, cfg.dim);
    std::vector<std::string> words;
    for (std::size_t w = 0; w < cfg.nouns_per_topic; ++w) {
      const auto noise = RandomUnit(rng, cfg.dim);
      std::vector<double> v(cfg.dim);
      for (std::size_t i = 0; i < cfg.dim; ++i) {
        v[i] = cfg.topic_weight * topic_dir[i] + cfg.noise_weight * noise[i];
      }
      v[0] += cfg.ring_weight * std::cos(angle);
      v[1] += cfg.ring_weight * std::sin(angle);
      words.emplace_back(kTopicNouns[t][w]);
      data.store.Add(words.back(), v);
    }
    data.topic_nouns.push_back(std::move(words));
  }
  for (std::size_t i = 0; i < cfg.train_conversations; ++i) {
    data.train.conversations.push_back(MakeConversation(
        cfg, data.topic_nouns, rng, "train-" + std::to_string(i)));
  }
  for (std::size_t i = 0; i < cfg.test_conversations; ++i) {
    data.test.conversations.push_back(MakeConversation(
        cfg, data.topic_nouns, rng, "test-" + std::to_string(i)));
  }
  return data;
}

}  // namespace tgc::synth
