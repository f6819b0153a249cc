#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpex/dataset.hpp"
#include "corpex/lexical.hpp"

namespace corpex {

// Dense word -> index map.  Built from training data only, in first-seen
// order, before any validation or test example is touched.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(std::span<const LabeledParagraph> train);

  // Adds the word if absent; returns its index.  Used by builders only.
  uint32_t intern(const std::string& word);

  std::optional<uint32_t> index(const std::string& word) const;
  size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::unordered_map<std::string, uint32_t> index_;
  std::vector<std::string> words_;
};

// Sparse feature vector, entries sorted by index, no duplicates.
struct SparseVector {
  std::vector<std::pair<uint32_t, double>> entries;

  bool operator==(const SparseVector&) const = default;
};

// 1.0 for every vocabulary word present in the paragraph; OOV ignored.
SparseVector binary_bow(const TaggedParagraph& paragraph,
                        const Vocabulary& vocab);

// Occurrence counts over the vocabulary; OOV ignored.
SparseVector count_bow(const TaggedParagraph& paragraph,
                       const Vocabulary& vocab);

double dot(const SparseVector& a, const SparseVector& b);
double squared_distance(const SparseVector& a, const SparseVector& b);

}  // namespace corpex
