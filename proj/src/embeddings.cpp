#include "corpex/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/text.hpp"

namespace corpex {

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path,
                                    uint64_t oov_seed, Warnings* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file: " + path.string());
  EmbeddingTable table;
  table.seed_ = oov_seed;
  std::string line;
  size_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (first_data_line && fields.size() == 2) {
      // word2vec text files open with a "count dim" header; skip it.
      bool numeric = true;
      for (auto f : fields)
        for (char ch : f)
          if (!is_ascii_digit(ch)) numeric = false;
      if (numeric) {
        first_data_line = false;
        continue;
      }
    }
    first_data_line = false;
    std::string word(fields[0]);
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (size_t i = 1; i < fields.size(); ++i) {
      try {
        vec.push_back(std::stod(std::string(fields[i])));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed vector component '" +
                        std::string(fields[i]) + "'");
      }
    }
    if (vec.empty())
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": no vector components");
    if (table.dim_ == 0) table.dim_ = vec.size();
    if (vec.size() != table.dim_)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": dimension mismatch: expected " +
                      std::to_string(table.dim_) + ", got " +
                      std::to_string(vec.size()));
    auto [it, inserted] = table.vectors_.emplace(word, std::move(vec));
    if (!inserted && warnings) {
      warnings->push_back(path.string() + ":" + std::to_string(line_no) +
                          ": duplicate word '" + word + "' (first kept)");
    }
  }
  if (table.vectors_.empty())
    throw DataError("embedding file has no vectors: " + path.string());
  table.finalize();
  return table;
}

EmbeddingTable EmbeddingTable::from_vectors(
    std::vector<std::pair<std::string, std::vector<double>>> vectors,
    uint64_t oov_seed) {
  EmbeddingTable table;
  table.seed_ = oov_seed;
  for (auto& [word, vec] : vectors) {
    if (table.dim_ == 0) table.dim_ = vec.size();
    if (vec.size() != table.dim_)
      throw DataError("dimension mismatch for word '" + word + "'");
    table.vectors_.emplace(std::move(word), std::move(vec));
  }
  if (table.vectors_.empty()) throw DataError("no vectors provided");
  table.finalize();
  return table;
}

void EmbeddingTable::finalize() {
  mean_.assign(dim_, 0.0);
  variance_.assign(dim_, 0.0);
  double n = static_cast<double>(vectors_.size());
  for (const auto& [word, vec] : vectors_) {
    for (size_t d = 0; d < dim_; ++d) mean_[d] += vec[d];
  }
  for (size_t d = 0; d < dim_; ++d) mean_[d] /= n;
  for (const auto& [word, vec] : vectors_) {
    for (size_t d = 0; d < dim_; ++d) {
      double diff = vec[d] - mean_[d];
      variance_[d] += diff * diff;
    }
  }
  for (size_t d = 0; d < dim_; ++d) variance_[d] /= n;
}

bool EmbeddingTable::contains(const std::string& word) const {
  return vectors_.count(word) > 0;
}

const std::vector<double>& EmbeddingTable::lookup(
    const std::string& word) const {
  if (auto it = vectors_.find(word); it != vectors_.end()) return it->second;
  std::string low = ascii_lower(word);
  if (low != word) {
    if (auto it = vectors_.find(low); it != vectors_.end()) return it->second;
  }
  std::lock_guard<std::mutex> lock(*mutex_);
  if (auto it = oov_cache_.find(low); it != oov_cache_.end())
    return it->second;
  // Keyed by the lowercased surface, not by lookup order: every run and
  // every thread interleaving draws the same vector for the same word.
  Rng rng = Rng::derive(seed_, "oov:" + low);
  std::vector<double> sample(dim_);
  for (size_t d = 0; d < dim_; ++d)
    sample[d] = rng.normal(mean_[d], std::sqrt(variance_[d]));
  return oov_cache_.emplace(std::move(low), std::move(sample)).first->second;
}

size_t EmbeddingTable::oov_cache_size() const {
  std::lock_guard<std::mutex> lock(*mutex_);
  return oov_cache_.size();
}

std::string_view to_string(Pooling pooling) {
  return pooling == Pooling::Sum ? "sum" : "average";
}

std::vector<double> embed_paragraph(const TaggedParagraph& paragraph,
                                    const EmbeddingTable& table,
                                    Pooling pooling) {
  std::vector<double> pooled(table.dim(), 0.0);
  if (paragraph.tokens.empty()) return pooled;
  std::vector<std::string> surfaces;
  surfaces.reserve(paragraph.tokens.size());
  for (const Token& t : paragraph.tokens) surfaces.push_back(t.surface);
  std::sort(surfaces.begin(), surfaces.end());
  for (const std::string& s : surfaces) {
    const std::vector<double>& vec = table.lookup(s);
    for (size_t d = 0; d < pooled.size(); ++d) pooled[d] += vec[d];
  }
  if (pooling == Pooling::Average) {
    double n = static_cast<double>(surfaces.size());
    for (double& v : pooled) v /= n;
  }
  return pooled;
}

}  // namespace corpex
