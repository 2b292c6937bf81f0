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
#include <algorithm>
#include <cmath>

#include "tgc/error.h"
#include "tgc/transition.h"

namespace tgc {

using nlohmann::json;

PmiTable PmiTable::Fit(const std::vector<TransitionExample>& examples,
                       const KeywordVocab& vocab) {
  if (examples.empty()) throw ValidationError("PMI: no transition examples");
  if (vocab.empty()) throw ValidationError("PMI: empty keyword vocabulary");
  PmiTable t;
  const std::size_t v = vocab.size();
  t.pair_counts_.resize(v);
  t.row_totals_.assign(v, 0.0);
  t.marginal_counts_.assign(v, 0.0);
  std::vector<std::size_t> prev_ids, next_ids;
  auto ids = [&vocab](const Keywords& kws, std::vector<std::size_t>& out) {
    out.clear();
    for (const auto& k : kws) {
      if (auto id = vocab.Find(k)) out.push_back(*id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  };
  for (const auto& ex : examples) {
    ids(ex.current_keywords, prev_ids);
    ids(ex.next_keywords, next_ids);
    for (std::size_t i : next_ids) {
      t.marginal_counts_[i] += 1.0;
      t.marginal_total_ += 1.0;
    }
    // Every turn holding prev is followed by a turn (that is what an example
    // is), so the row total counts turns, not pairs.
    for (std::size_t j : prev_ids) {
      t.row_totals_[j] += 1.0;
      for (std::size_t i : next_ids) t.pair_counts_[j][i] += 1.0;
    }
  }
  return t;
}

double PmiTable::Marginal(std::size_t i) const {
  return marginal_total_ > 0.0 ? marginal_counts_.at(i) / marginal_total_
                               : 0.0;
}

double PmiTable::Conditional(std::size_t next, std::size_t prev) const {
  const auto& row = pair_counts_.at(prev);
  auto it = row.find(next);
  if (it == row.end()) return 0.0;
  return it->second / row_totals_[prev];
}

std::optional<double> PmiTable::Pmi(std::size_t next, std::size_t prev) const {
  const auto& row = pair_counts_.at(prev);
  auto it = row.find(next);
  if (it == row.end()) return std::nullopt;
  return std::log((it->second / row_totals_[prev]) / Marginal(next));
}

const std::map<std::size_t, double>& PmiTable::Successors(
    std::size_t prev) const {
  return pair_counts_.at(prev);
}

json PmiTable::ToJson(const KeywordVocab& vocab) const {
  json pairs = json::array();
  for (std::size_t prev = 0; prev < pair_counts_.size(); ++prev) {
    for (const auto& [next, count] : pair_counts_[prev]) {
      pairs.push_back({prev, next, count});
    }
  }
  return {{"version", kModelFormatVersion},
          {"type", "pmi"},
          {"vocab", vocab.words()},
          {"marginal_counts", marginal_counts_},
          {"row_totals", row_totals_},
          {"pairs", std::move(pairs)}};
}

PmiTable PmiTable::FromJson(const json& j, const KeywordVocab& vocab) {
  if (j.at("type") != "pmi") throw ParseError("not a PMI model", 0);
  CheckFormatVersion(j, "PMI model");
  if (j.at("vocab").get<std::vector<std::string>>() != vocab.words()) {
    throw ValidationError("PMI model vocabulary does not match the corpus");
  }
  PmiTable t;
  const std::size_t v = vocab.size();
  t.marginal_counts_ = j.at("marginal_counts").get<std::vector<double>>();
  if (t.marginal_counts_.size() != v) {
    throw ValidationError("PMI model marginal size mismatch");
  }
  for (double c : t.marginal_counts_) t.marginal_total_ += c;
  t.pair_counts_.resize(v);
  t.row_totals_ = j.at("row_totals").get<std::vector<double>>();
  if (t.row_totals_.size() != v) {
    throw ValidationError("PMI model row total size mismatch");
  }
  for (const auto& p : j.at("pairs")) {
    const auto prev = p.at(0).get<std::size_t>();
    const auto next = p.at(1).get<std::size_t>();
    const auto count = p.at(2).get<double>();
    if (prev >= v || next >= v) throw ValidationError("PMI pair out of range");
    if (!(count > 0.0) || count > t.row_totals_[prev]) {
      throw ValidationError("PMI pair count inconsistent with its row total");
    }
    t.pair_counts_[prev][next] += count;
  }
  return t;
}

KeywordDistribution PredictPmi(const Keywords& current, const PmiTable& table,
                               const KeywordVocab& vocab) {
  const std::size_t v = vocab.size();
  std::vector<double> scores(v, 0.0);
  for (const auto& w : current) {
    const auto prev = vocab.Find(w);
    if (!prev) continue;
    for (const auto& [next, count] : table.Successors(*prev)) {
      scores[next] += *table.Pmi(next, *prev);
    }
  }
  KeywordDistribution d;
  d.probs.assign(v, v > 0 ? 1.0 / static_cast<double>(v) : 0.0);
  if (v == 0) return d;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  if (*hi - min <= 0.0) return d;
  double total = 0.0;
  for (auto& s : scores) {
    s -= min;
    total += s;
  }
  for (std::size_t i = 0; i < v; ++i) d.probs[i] = scores[i] / total;
  return d;
}

KeywordDistribution PmiPredictor::Predict(const TransitionContext& ctx,
                                          Rng&) const {
  return PredictPmi(ctx.current, table_, vocab_);
}

}  // namespace tgc
