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
#ifndef TGC_EMBED_H_
#define TGC_EMBED_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tgc {

enum class OovPolicy {
  kError,       // lookup of an unknown word throws LookupError
  kZero,        // unknown words map to the zero vector
  kHashRandom,  // unknown words map to a per-word seeded random unit vector
};

// Unit-norm word vectors. Immutable after construction.
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t dim, OovPolicy policy = OovPolicy::kHashRandom,
                 std::uint64_t oov_seed = 0);

  // Normalizes and stores `vec`. Throws ValidationError on a dimension
  // mismatch or a zero vector.
  void Add(const std::string& word, std::span<const double> vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  OovPolicy oov_policy() const { return policy_; }
  std::uint64_t oov_seed() const { return oov_seed_; }
  bool Contains(const std::string& word) const { return index_.count(word); }

  // Stored vector, or nullptr for unknown words.
  const double* Find(const std::string& word) const;

  // Vector under the OOV policy; writes dim() values to `out`.
  void Resolve(const std::string& word, std::span<double> out) const;
  std::vector<double> Resolve(const std::string& word) const;

  // Cosine similarity of the two resolved vectors. A zero vector (kZero
  // policy) has similarity 0 with everything.
  double Cosine(const std::string& a, const std::string& b) const;

  const std::vector<std::string>& words() const { return words_; }

  // Fraction of words from the most recent load request that were found.
  double coverage() const { return coverage_; }
  void set_coverage(double c) { coverage_ = c; }

 private:
  std::size_t dim_;
  OovPolicy policy_;
  std::uint64_t oov_seed_;
  std::vector<std::string> words_;
  std::vector<double> data_;  // row-major, words_.size() x dim_
  std::unordered_map<std::string, std::size_t> index_;
  double coverage_ = 1.0;
};

// Whitespace-separated text, `word v1 ... v_dim` per line. A leading
// `<count> <dim>` header line is tolerated. When `vocab` is set only those
// words are kept and coverage() reports the fraction found.
EmbeddingStore LoadEmbeddings(
    const std::string& path, std::size_t dim,
    const std::unordered_set<std::string>* vocab = nullptr,
    OovPolicy policy = OovPolicy::kHashRandom, std::uint64_t oov_seed = 0);

void SaveEmbeddings(const EmbeddingStore& store, const std::string& path);

double Cosine(const std::string& a, const std::string& b,
              const EmbeddingStore& store);

// Closeness of a keyword to the conversation target.
inline double Closeness(const std::string& keyword, const std::string& target,
                        const EmbeddingStore& store) {
  return store.Cosine(keyword, target);
}

}  // namespace tgc

#endif  // TGC_EMBED_H_
