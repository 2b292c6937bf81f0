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
#include "tgc/retrieval.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "internal/train_loop.h"
#include "tgc/error.h"

namespace tgc {

using nlohmann::json;

namespace {

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Resolves each distinct token once.
class TokenVectors {
 public:
  explicit TokenVectors(const EmbeddingStore& store) : store_(store) {}

  std::vector<double> Mean(const std::vector<std::string>& tokens) {
    std::vector<double> x(store_.dim(), 0.0);
    std::size_t n = 0;
    for (const auto& t : tokens) {
      if (t == kTurnSeparator) continue;
      const auto& v = Get(t);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += v[i];
      ++n;
    }
    if (n > 0) {
      for (auto& xi : x) xi /= static_cast<double>(n);
    }
    return x;
  }

 private:
  const std::vector<double>& Get(const std::string& token) {
    auto it = cache_.find(token);
    if (it == cache_.end()) {
      it = cache_.emplace(token, store_.Resolve(token)).first;
    }
    return it->second;
  }

  const EmbeddingStore& store_;
  std::unordered_map<std::string, std::vector<double>> cache_;
};

void EncoderToJson(const Encoder& e, json& j) {
  j = {{"in", e.in}, {"out", e.out}, {"w", e.w}, {"b", e.b}};
}

Encoder EncoderFromJson(const json& j) {
  Encoder e;
  e.in = j.at("in").get<std::size_t>();
  e.out = j.at("out").get<std::size_t>();
  e.w = j.at("w").get<std::vector<double>>();
  e.b = j.at("b").get<std::vector<double>>();
  if (e.w.size() != e.in * e.out || e.b.size() != e.out) {
    throw ValidationError("encoder parameter shapes are inconsistent");
  }
  return e;
}

// x -> tanh(w x + b)
void ApplyInto(const Encoder& e, const double* x, double* out) {
  for (std::size_t r = 0; r < e.out; ++r) {
    double z = e.b[r];
    const double* w = &e.w[r * e.in];
    for (std::size_t c = 0; c < e.in; ++c) z += w[c] * x[c];
    out[r] = std::tanh(z);
  }
}

// Accumulates the encoder gradient given d loss / d feature.
void BackpropEncoder(const Encoder& e, const double* x, const double* feat,
                     const double* dfeat, Encoder& grad) {
  for (std::size_t r = 0; r < e.out; ++r) {
    const double dz = dfeat[r] * (1.0 - feat[r] * feat[r]);
    if (dz == 0.0) continue;
    grad.b[r] += dz;
    double* gw = &grad.w[r * e.in];
    for (std::size_t c = 0; c < e.in; ++c) gw[c] += dz * x[c];
  }
}

}  // namespace

std::vector<double> MeanEmbedding(const std::vector<std::string>& tokens,
                                  const EmbeddingStore& store) {
  TokenVectors tv(store);
  return tv.Mean(tokens);
}

std::vector<std::string> HistoryTokens(const std::vector<Utterance>& history,
                                       std::size_t turns) {
  std::vector<std::string> out;
  const std::size_t first = history.size() > turns ? history.size() - turns : 0;
  for (std::size_t i = first; i < history.size(); ++i) {
    if (!out.empty()) out.push_back(kTurnSeparator);
    out.insert(out.end(), history[i].tokens.begin(), history[i].tokens.end());
  }
  return out;
}

std::vector<double> Encoder::Apply(const std::vector<double>& x) const {
  if (x.size() != in) throw ContractError("encoder input width mismatch");
  std::vector<double> f(out);
  ApplyInto(*this, x.data(), f.data());
  return f;
}

Encoder Encoder::Init(std::size_t in, std::size_t out, Rng& rng) {
  Encoder e;
  e.in = in;
  e.out = out;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  e.w.resize(in * out);
  for (auto& x : e.w) x = UniformReal(rng, -limit, limit);
  e.b.assign(out, 0.0);
  return e;
}

ParamBlocks RetrievalModel::MutableBlocks() {
  return {std::span<double>(history.w),   std::span<double>(history.b),
          std::span<double>(keyword.w),   std::span<double>(keyword.b),
          std::span<double>(candidate.w), std::span<double>(candidate.b),
          std::span<double>(final_w),     std::span<double>(&final_b, 1)};
}

ConstParamBlocks RetrievalModel::Blocks() const {
  return {std::span<const double>(history.w),
          std::span<const double>(history.b),
          std::span<const double>(keyword.w),
          std::span<const double>(keyword.b),
          std::span<const double>(candidate.w),
          std::span<const double>(candidate.b),
          std::span<const double>(final_w),
          std::span<const double>(&final_b, 1)};
}

RetrievalModel RetrievalModel::Init(std::size_t dim, std::size_t hidden,
                                    bool keyword_conditioned, Rng& rng) {
  RetrievalModel m;
  m.dim = dim;
  m.hidden = hidden;
  m.keyword_conditioned = keyword_conditioned;
  // All roles start from the same weights, so h (*) c begins as a
  // similarity between the two inputs.
  m.history = Encoder::Init(dim, hidden, rng);
  if (keyword_conditioned) m.keyword = m.history;
  m.candidate = m.history;
  m.final_w.assign(keyword_conditioned ? 2 * hidden : hidden, 0.0);
  return m;
}

RetrievalModel RetrievalModel::ZerosLike(const RetrievalModel& m) {
  RetrievalModel z = m;
  for (auto block : z.MutableBlocks()) std::fill(block.begin(), block.end(), 0.0);
  return z;
}

std::uint64_t RetrievalModel::Fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(dim);
  mix(hidden);
  mix(keyword_conditioned ? 1 : 0);
  mix(history_turns);
  for (auto block : Blocks()) {
    mix(block.size());
    for (double x : block) mix(std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

json RetrievalModel::ToJson() const {
  json j = {{"version", kModelFormatVersion},
            {"type", "retrieval"},
            {"dim", dim},
            {"hidden", hidden},
            {"keyword_conditioned", keyword_conditioned},
            {"history_turns", history_turns},
            {"final_w", final_w},
            {"final_b", final_b}};
  EncoderToJson(history, j["history"]);
  if (keyword_conditioned) EncoderToJson(keyword, j["keyword"]);
  EncoderToJson(candidate, j["candidate"]);
  return j;
}

RetrievalModel RetrievalModel::FromJson(const json& j) {
  if (j.at("type") != "retrieval") throw ParseError("not a retrieval model", 0);
  CheckFormatVersion(j, "retrieval model");
  RetrievalModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.hidden = j.at("hidden").get<std::size_t>();
  m.keyword_conditioned = j.at("keyword_conditioned").get<bool>();
  m.history_turns = j.value("history_turns", std::size_t{2});
  m.history = EncoderFromJson(j.at("history"));
  if (m.keyword_conditioned) m.keyword = EncoderFromJson(j.at("keyword"));
  m.candidate = EncoderFromJson(j.at("candidate"));
  m.final_w = j.at("final_w").get<std::vector<double>>();
  m.final_b = j.at("final_b").get<double>();
  for (const Encoder* e : {&m.history, &m.candidate}) {
    if (e->in != m.dim || e->out != m.hidden) {
      throw ValidationError("retrieval encoder dims disagree with the model");
    }
  }
  if (m.keyword_conditioned &&
      (m.keyword.in != m.dim || m.keyword.out != m.hidden)) {
    throw ValidationError("retrieval encoder dims disagree with the model");
  }
  if (m.final_w.size() != (m.keyword_conditioned ? 2 : 1) * m.hidden) {
    throw ValidationError("retrieval final layer width mismatch");
  }
  return m;
}

std::vector<double> Encode(const std::vector<std::string>& tokens,
                           const Encoder& encoder,
                           const EmbeddingStore& store) {
  return encoder.Apply(MeanEmbedding(tokens, store));
}

double ScoreResponse(const std::vector<double>& history_feat,
                     const std::vector<double>& keyword_feat,
                     const std::vector<double>& candidate_feat,
                     const RetrievalModel& model) {
  const std::size_t h = model.hidden;
  if (history_feat.size() != h || candidate_feat.size() != h ||
      (model.keyword_conditioned && keyword_feat.size() != h)) {
    throw ContractError("retrieval features must share the model width");
  }
  double z = model.final_b;
  for (std::size_t i = 0; i < h; ++i) {
    z += model.final_w[i] * history_feat[i] * candidate_feat[i];
  }
  if (model.keyword_conditioned) {
    for (std::size_t i = 0; i < h; ++i) {
      z += model.final_w[h + i] * keyword_feat[i] * candidate_feat[i];
    }
  }
  return Sigmoid(z);
}

namespace {

// Folds history and keyword features into one query vector q so that the
// logit of a candidate with feature c is q . c + final_b.
std::vector<double> QueryVector(const RetrievalModel& model,
                                const EmbeddingStore& store,
                                const std::vector<Utterance>& history,
                                const std::string& keyword) {
  const std::size_t h = model.hidden;
  const auto hf = Encode(HistoryTokens(history, model.history_turns),
                         model.history, store);
  std::vector<double> q(h);
  for (std::size_t i = 0; i < h; ++i) q[i] = model.final_w[i] * hf[i];
  if (model.keyword_conditioned) {
    std::vector<std::string> kw;
    if (!keyword.empty()) kw.push_back(keyword);
    const auto kf = Encode(kw, model.keyword, store);
    for (std::size_t i = 0; i < h; ++i) q[i] += model.final_w[h + i] * kf[i];
  }
  return q;
}

}  // namespace

std::vector<double> ScoreCandidates(const RetrievalModel& model,
                                    const EmbeddingStore& store,
                                    const std::vector<Utterance>& history,
                                    const std::string& keyword,
                                    const std::vector<Utterance>& candidates) {
  const auto q = QueryVector(model, store, history, keyword);
  TokenVectors tv(store);
  std::vector<double> out;
  out.reserve(candidates.size());
  std::vector<double> feat(model.hidden);
  for (const auto& c : candidates) {
    const auto x = tv.Mean(c.tokens);
    ApplyInto(model.candidate, x.data(), feat.data());
    double z = model.final_b;
    for (std::size_t i = 0; i < model.hidden; ++i) z += q[i] * feat[i];
    out.push_back(Sigmoid(z));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Utterance> UniqueUtterances(const Corpus& corpus) {
  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      if (seen.insert(u.Text()).second) out.push_back(u);
    }
  }
  return out;
}

ResponsePool ResponsePool::Build(std::vector<Utterance> utterances,
                                 const RetrievalModel& model,
                                 const EmbeddingStore& store) {
  if (utterances.empty()) throw ValidationError("response pool is empty");
  ResponsePool pool;
  pool.hidden_ = model.hidden;
  pool.fingerprint_ = model.Fingerprint();
  pool.features_.resize(utterances.size() * model.hidden);
  TokenVectors tv(store);
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto x = tv.Mean(utterances[i].tokens);
    ApplyInto(model.candidate, x.data(), &pool.features_[i * model.hidden]);
  }
  pool.utterances_ = std::move(utterances);
  return pool;
}

void ResponsePool::SaveCache(const std::string& prefix) const {
  {
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot write " + prefix + ".bin");
    for (double v : features_) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      unsigned char bytes[4] = {
          static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
          static_cast<unsigned char>(bits >> 16),
          static_cast<unsigned char>(bits >> 24)};
      bin.write(reinterpret_cast<const char*>(bytes), 4);
    }
  }
  json texts = json::array();
  for (const auto& u : utterances_) {
    texts.push_back({{"speaker", u.speaker == Speaker::kA ? "A" : "B"},
                     {"text", u.Text()},
                     {"keywords", u.keywords}});
  }
  json manifest = {{"version", kModelFormatVersion},
                   {"count", utterances_.size()},
                   {"hidden", hidden_},
                   {"dtype", "float32-le"},
                   {"model_fingerprint", fingerprint_},
                   {"utterances", std::move(texts)}};
  WriteJsonFile(manifest, prefix + ".json");
}

ResponsePool ResponsePool::LoadCache(const std::string& prefix) {
  const json manifest = ReadJsonFile(prefix + ".json");
  ResponsePool pool;
  CheckFormatVersion(manifest, "response pool cache");
  try {
    pool.hidden_ = manifest.at("hidden").get<std::size_t>();
    pool.fingerprint_ = manifest.at("model_fingerprint").get<std::uint64_t>();
    for (const auto& ju : manifest.at("utterances")) {
      pool.utterances_.push_back(MakeUtterance(
          ju.at("speaker") == "A" ? Speaker::kA : Speaker::kB,
          ju.at("text").get<std::string>(),
          ju.at("keywords").get<Keywords>(), true));
    }
  } catch (const json::exception& e) {
    throw ParseError(prefix + ".json: " + e.what(), 0);
  }
  const std::size_t n = pool.utterances_.size() * pool.hidden_;
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw ParseError("cannot open " + prefix + ".bin", 0);
  pool.features_.resize(n);
  unsigned char bytes[4];
  for (std::size_t i = 0; i < n; ++i) {
    if (!bin.read(reinterpret_cast<char*>(bytes), 4)) {
      throw ParseError(prefix + ".bin is truncated", 0);
    }
    const std::uint32_t bits = bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    pool.features_[i] = std::bit_cast<float>(bits);
  }
  return pool;
}

std::vector<ScoredResponse> Retrieve(
    const std::vector<Utterance>& history, const std::string& keyword,
    const ResponsePool& pool, const RetrievalModel& model,
    const EmbeddingStore& store, std::size_t top_k,
    const std::function<bool(const Utterance&)>& filter) {
  if (pool.empty()) throw ContractError("retrieve: empty response pool");
  if (top_k == 0) throw ContractError("retrieve: top_k must be >= 1");
  if (pool.model_fingerprint() != model.Fingerprint() ||
      pool.hidden() != model.hidden) {
    throw StateError("response pool features were built for another model");
  }
  const auto q = QueryVector(model, store, history, keyword);
  std::vector<ScoredResponse> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (filter && !filter(pool.at(i))) continue;
    const double* c = pool.Feature(i);
    double z = model.final_b;
    for (std::size_t d = 0; d < model.hidden; ++d) z += q[d] * c[d];
    scored.push_back({i, Sigmoid(z)});
  }
  const std::size_t k = std::min(top_k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                    [](const ScoredResponse& a, const ScoredResponse& b) {
                      if (a.prob != b.prob) return a.prob > b.prob;
                      return a.index < b.index;
                    });
  scored.resize(k);
  return scored;
}

// ---------------------------------------------------------------------------
// Training

struct PreparedRetrievalData {
  std::size_t dim = 0;
  std::size_t history_turns = 2;
  // Mean embeddings of every distinct token sequence, row-major.
  std::vector<double> inputs;
  struct Example {
    std::size_t history;
    std::size_t keyword;
    std::vector<std::size_t> candidates;  // gold first
  };
  std::vector<Example> examples;

  const double* Row(std::size_t i) const { return &inputs[i * dim]; }
};

RetrievalTrainer::RetrievalTrainer(const std::vector<RetrievalExample>& examples,
                                   const EmbeddingStore& store,
                                   std::uint64_t keyword_seed,
                                   std::size_t history_turns)
    : data_(std::make_unique<PreparedRetrievalData>()) {
  data_->dim = store.dim();
  data_->history_turns = history_turns;
  TokenVectors tv(store);
  std::unordered_map<std::string, std::size_t> rows;
  auto row_of = [&](const std::vector<std::string>& tokens) {
    std::string key;
    for (const auto& t : tokens) {
      key += t;
      key += ' ';
    }
    auto it = rows.find(key);
    if (it != rows.end()) return it->second;
    const auto x = tv.Mean(tokens);
    data_->inputs.insert(data_->inputs.end(), x.begin(), x.end());
    const std::size_t id = rows.size();
    rows.emplace(std::move(key), id);
    return id;
  };
  Rng rng(keyword_seed);
  for (const auto& ex : examples) {
    PreparedRetrievalData::Example p;
    p.history = row_of(HistoryTokens(ex.history, history_turns));
    std::vector<std::string> kw;
    if (!ex.gold_keywords.empty()) {
      kw.push_back(ex.gold_keywords[UniformIndex(rng, ex.gold_keywords.size())]);
    }
    p.keyword = row_of(kw);
    p.candidates.push_back(row_of(ex.gold_response.tokens));
    for (const auto& n : ex.negatives) p.candidates.push_back(row_of(n.tokens));
    data_->examples.push_back(std::move(p));
  }
}

RetrievalTrainer::~RetrievalTrainer() = default;

std::size_t RetrievalTrainer::size() const { return data_->examples.size(); }

double RetrievalTrainer::Loss(const RetrievalModel& model,
                              const std::vector<std::size_t>& batch,
                              RetrievalModel* grad) const {
  const auto& d = *data_;
  if (model.dim != d.dim) {
    throw ContractError("retrieval model dim differs from the embeddings");
  }
  if (grad != nullptr) *grad = RetrievalModel::ZerosLike(model);
  const std::size_t h = model.hidden;
  const bool kw = model.keyword_conditioned;
  std::vector<double> hf(h), kf(h), dh(h), dk(h), cf(h), dc(h);
  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t idx : batch) {
    const auto& ex = d.examples.at(idx);
    ApplyInto(model.history, d.Row(ex.history), hf.data());
    if (kw) ApplyInto(model.keyword, d.Row(ex.keyword), kf.data());
    std::fill(dh.begin(), dh.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    for (std::size_t ci = 0; ci < ex.candidates.size(); ++ci) {
      const double label = ci == 0 ? 1.0 : 0.0;
      const double* x = d.Row(ex.candidates[ci]);
      ApplyInto(model.candidate, x, cf.data());
      double z = model.final_b;
      for (std::size_t i = 0; i < h; ++i) {
        z += model.final_w[i] * hf[i] * cf[i];
        if (kw) z += model.final_w[h + i] * kf[i] * cf[i];
      }
      total += Softplus(z) - label * z;
      ++terms;
      if (grad == nullptr) continue;
      const double dz = Sigmoid(z) - label;
      grad->final_b += dz;
      for (std::size_t i = 0; i < h; ++i) {
        grad->final_w[i] += dz * hf[i] * cf[i];
        dh[i] += dz * model.final_w[i] * cf[i];
        dc[i] = dz * model.final_w[i] * hf[i];
        if (kw) {
          grad->final_w[h + i] += dz * kf[i] * cf[i];
          dk[i] += dz * model.final_w[h + i] * cf[i];
          dc[i] += dz * model.final_w[h + i] * kf[i];
        }
      }
      BackpropEncoder(model.candidate, x, cf.data(), dc.data(),
                      grad->candidate);
    }
    if (grad == nullptr) continue;
    BackpropEncoder(model.history, d.Row(ex.history), hf.data(), dh.data(),
                    grad->history);
    if (kw) {
      BackpropEncoder(model.keyword, d.Row(ex.keyword), kf.data(), dk.data(),
                      grad->keyword);
    }
  }
  if (terms == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(terms);
  if (grad != nullptr) {
    for (auto block : grad->MutableBlocks()) {
      for (auto& g : block) g *= scale;
    }
  }
  return total * scale;
}

RetrievalModel RetrievalTrainer::Train(const TrainConfig& config,
                                       RetrievalModel init,
                                       TrainTrace* trace) const {
  if (config.epochs == 0) return init;
  init.history_turns = data_->history_turns;
  std::vector<std::size_t> ids(size());
  std::iota(ids.begin(), ids.end(), 0);
  auto loss = [this](const RetrievalModel& m,
                     const std::vector<const std::size_t*>& batch,
                     RetrievalModel* grad) {
    std::vector<std::size_t> idx;
    idx.reserve(batch.size());
    for (const std::size_t* p : batch) idx.push_back(*p);
    return Loss(m, idx, grad);
  };
  return internal::RunTraining(ids, config, std::move(init), loss,
                               &RetrievalModel::ZerosLike,
                               trace ? &trace->epoch_loss : nullptr,
                               "retrieval");
}

RetrievalModel TrainRetrieval(const std::vector<RetrievalExample>& examples,
                              const EmbeddingStore& store,
                              const TrainConfig& config, RetrievalModel init,
                              TrainTrace* trace) {
  if (config.epochs == 0) return init;
  RetrievalTrainer trainer(examples, store, config.seed, init.history_turns);
  return trainer.Train(config, std::move(init), trace);
}

}  // namespace tgc
