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
#include "tgc/embed.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tgc/error.h"
#include "tgc/random.h"

namespace tgc {

EmbeddingStore::EmbeddingStore(std::size_t dim, OovPolicy policy,
                               std::uint64_t oov_seed)
    : dim_(dim), policy_(policy), oov_seed_(oov_seed) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingStore::Add(const std::string& word, std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw ValidationError("vector for '" + word + "' has dimension " +
                          std::to_string(vec.size()) + ", expected " +
                          std::to_string(dim_));
  }
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("vector for '" + word + "' cannot be normalized");
  }
  std::size_t row;
  if (auto it = index_.find(word); it != index_.end()) {
    row = it->second;
  } else {
    row = words_.size();
    words_.push_back(word);
    index_.emplace(word, row);
    data_.resize(data_.size() + dim_);
  }
  for (std::size_t i = 0; i < dim_; ++i) data_[row * dim_ + i] = vec[i] / norm;
}

const double* EmbeddingStore::Find(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? nullptr : &data_[it->second * dim_];
}

void EmbeddingStore::Resolve(const std::string& word,
                             std::span<double> out) const {
  if (const double* v = Find(word)) {
    std::copy(v, v + dim_, out.begin());
    return;
  }
  switch (policy_) {
    case OovPolicy::kError:
      throw LookupError("word '" + word + "' has no embedding");
    case OovPolicy::kZero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case OovPolicy::kHashRandom: {
      Rng rng(SplitMix64(Fnv1a(word) ^ oov_seed_));
      double norm = 0.0;
      for (auto& x : out) {
        x = StandardNormal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : out) x /= norm;
      return;
    }
  }
}

std::vector<double> EmbeddingStore::Resolve(const std::string& word) const {
  std::vector<double> v(dim_);
  Resolve(word, v);
  return v;
}

double EmbeddingStore::Cosine(const std::string& a,
                              const std::string& b) const {
  const auto va = Resolve(a);
  const auto vb = Resolve(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // Stored vectors are unit length already; dividing again only absorbs
  // rounding so the result stays inside [-1, 1].
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double Cosine(const std::string& a, const std::string& b,
              const EmbeddingStore& store) {
  return store.Cosine(a, b);
}

namespace {

bool ParseDouble(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r') {
      ++j;
    }
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace

EmbeddingStore LoadEmbeddings(const std::string& path, std::size_t dim,
                              const std::unordered_set<std::string>* vocab,
                              OovPolicy policy, std::uint64_t oov_seed) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file " + path, 0);
  EmbeddingStore store(dim, policy, oov_seed);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vec(dim);
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = SplitFields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      double a, b;
      if (ParseDouble(fields[0], a) && ParseDouble(fields[1], b) &&
          b == static_cast<double>(dim)) {
        continue;
      }
    }
    if (fields.size() != dim + 1) {
      throw ParseError("expected " + std::to_string(dim) + " values, got " +
                           std::to_string(fields.size() - 1),
                       line_no);
    }
    const std::string word(fields[0]);
    if (vocab != nullptr && !vocab->count(word)) continue;
    for (std::size_t i = 0; i < dim; ++i) {
      if (!ParseDouble(fields[i + 1], vec[i]) || !std::isfinite(vec[i])) {
        throw ParseError("bad value '" + std::string(fields[i + 1]) + "'",
                         line_no);
      }
    }
    try {
      store.Add(word, vec);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (vocab != nullptr && !vocab->empty()) {
    std::size_t found = 0;
    for (const auto& w : *vocab) found += store.Contains(w) ? 1 : 0;
    store.set_coverage(static_cast<double>(found) /
                       static_cast<double>(vocab->size()));
    spdlog::info("embeddings: {} of {} requested words found ({:.1f}%)", found,
                 vocab->size(), 100.0 * store.coverage());
  }
  return store;
}

void SaveEmbeddings(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write embedding file " + path);
  char buf[32];
  for (const auto& w : store.words()) {
    out << w;
    const double* v = store.Find(w);
    for (std::size_t i = 0; i < store.dim(); ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", v[i]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace tgc
