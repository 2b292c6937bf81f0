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
#include "tgc/transition.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

std::vector<std::size_t> KeywordDistribution::TopK(std::size_t k) const {
  std::vector<std::size_t> ids(probs.size());
  std::iota(ids.begin(), ids.end(), 0);
  k = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                    [this](std::size_t a, std::size_t b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

std::size_t KeywordDistribution::Argmax() const {
  if (probs.empty()) throw ContractError("argmax of an empty distribution");
  return TopK(1).front();
}

double KeywordDistribution::Sum() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

KeywordDistribution Softmax(const std::vector<double>& scores) {
  KeywordDistribution d;
  if (scores.empty()) return d;
  const double mx = *std::max_element(scores.begin(), scores.end());
  d.probs.resize(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    d.probs[i] = std::exp(scores[i] - mx);
    z += d.probs[i];
  }
  for (auto& p : d.probs) p /= z;
  return d;
}

KeywordDistribution PredictRandom(const KeywordVocab& vocab, Rng& rng) {
  if (vocab.empty()) throw ContractError("random predictor: empty vocabulary");
  KeywordDistribution d;
  d.probs.assign(vocab.size(), 0.0);
  d.probs[UniformIndex(rng, vocab.size())] = 1.0;
  return d;
}

KeywordDistribution RandomPredictor::Predict(const TransitionContext&,
                                             Rng& rng) const {
  return PredictRandom(vocab_, rng);
}

void CheckFormatVersion(const json& j, std::string_view what) {
  const auto it = j.find("version");
  if (it == j.end() || !it->is_number_integer() ||
      it->get<int>() != kModelFormatVersion) {
    throw ValidationError(std::string(what) + ": unsupported format version");
  }
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void WriteJsonFile(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(1) << '\n';
}

std::unique_ptr<TransitionPredictor> LoadTransitionPredictor(
    const std::string& path, const KeywordVocab& vocab,
    const EmbeddingStore& store) {
  const json j = ReadJsonFile(path);
  const auto type = j.value("type", std::string());
  try {
    if (type == "pmi") {
      return std::make_unique<PmiPredictor>(PmiTable::FromJson(j, vocab),
                                            vocab);
    }
    if (type == "kernel") {
      return std::make_unique<KernelPredictor>(KernelModel::FromJson(j), vocab,
                                               store);
    }
    if (type == "neural") {
      return std::make_unique<NeuralPredictor>(NeuralModel::FromJson(j, vocab),
                                               vocab, store);
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  throw ParseError(path + ": unknown transition model type '" + type + "'", 0);
}

}  // namespace tgc
