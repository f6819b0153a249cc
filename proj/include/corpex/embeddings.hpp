#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpex/corpus.hpp"
#include "corpex/lexical.hpp"

namespace corpex {

// Pretrained word vectors in word2vec-style text format ("word v1 .. vD" per
// line, optional "count dim" header).  Out-of-vocabulary words get a vector
// drawn once from N(mu_d, sigma2_d) — the per-dimension moments of the
// loaded vectors — seeded by (oov_seed, lowercased word), so the draw does
// not depend on lookup order or thread timing.  Lookups fall back to the
// lowercased surface before sampling.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  static EmbeddingTable load(const std::filesystem::path& path,
                             uint64_t oov_seed, Warnings* warnings = nullptr);
  static EmbeddingTable from_vectors(
      std::vector<std::pair<std::string, std::vector<double>>> vectors,
      uint64_t oov_seed);

  size_t dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  uint64_t oov_seed() const { return seed_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& variance() const { return variance_; }

  bool contains(const std::string& word) const;

  // Exact match, then lowercase, then the cached OOV sample.  Thread-safe.
  const std::vector<double>& lookup(const std::string& word) const;

  size_t oov_cache_size() const;

 private:
  void finalize();

  std::unordered_map<std::string, std::vector<double>> vectors_;
  mutable std::unordered_map<std::string, std::vector<double>> oov_cache_;
  // unique_ptr keeps the table movable despite the mutex
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  std::vector<double> mean_, variance_;  // population moments per dimension
  size_t dim_ = 0;
  uint64_t seed_ = 0;
};

enum class Pooling { Sum, Average };

std::string_view to_string(Pooling pooling);

// Sum or average of the token vectors.  Tokens are accumulated in sorted
// surface order, which makes the result exactly permutation-invariant
// (floating-point addition is order-sensitive).  Empty paragraph -> zeros.
std::vector<double> embed_paragraph(const TaggedParagraph& paragraph,
                                    const EmbeddingTable& table,
                                    Pooling pooling);

}  // namespace corpex
