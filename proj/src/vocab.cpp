#include "corpex/vocab.hpp"

#include <algorithm>
#include <map>

namespace corpex {

Vocabulary Vocabulary::build(std::span<const LabeledParagraph> train) {
  Vocabulary vocab;
  for (const LabeledParagraph& example : train) {
    for (const Token& token : example.paragraph.tokens)
      vocab.intern(token.surface);
  }
  return vocab;
}

uint32_t Vocabulary::intern(const std::string& word) {
  auto [it, inserted] =
      index_.emplace(word, static_cast<uint32_t>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

std::optional<uint32_t> Vocabulary::index(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

SparseVector from_counts(const std::map<uint32_t, double>& counts) {
  SparseVector v;
  v.entries.assign(counts.begin(), counts.end());  // already index-sorted
  return v;
}

}  // namespace

SparseVector binary_bow(const TaggedParagraph& paragraph,
                        const Vocabulary& vocab) {
  std::map<uint32_t, double> present;
  for (const Token& token : paragraph.tokens) {
    if (auto idx = vocab.index(token.surface)) present[*idx] = 1.0;
  }
  return from_counts(present);
}

SparseVector count_bow(const TaggedParagraph& paragraph,
                       const Vocabulary& vocab) {
  std::map<uint32_t, double> counts;
  for (const Token& token : paragraph.tokens) {
    if (auto idx = vocab.index(token.surface)) counts[*idx] += 1.0;
  }
  return from_counts(counts);
}

double dot(const SparseVector& a, const SparseVector& b) {
  double acc = 0.0;
  size_t i = 0, j = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    if (a.entries[i].first < b.entries[j].first) {
      ++i;
    } else if (a.entries[i].first > b.entries[j].first) {
      ++j;
    } else {
      acc += a.entries[i].second * b.entries[j].second;
      ++i, ++j;
    }
  }
  return acc;
}

double squared_distance(const SparseVector& a, const SparseVector& b) {
  double acc = 0.0;
  size_t i = 0, j = 0;
  while (i < a.entries.size() || j < b.entries.size()) {
    if (j == b.entries.size() ||
        (i < a.entries.size() && a.entries[i].first < b.entries[j].first)) {
      acc += a.entries[i].second * a.entries[i].second;
      ++i;
    } else if (i == a.entries.size() ||
               a.entries[i].first > b.entries[j].first) {
      acc += b.entries[j].second * b.entries[j].second;
      ++j;
    } else {
      double d = a.entries[i].second - b.entries[j].second;
      acc += d * d;
      ++i, ++j;
    }
  }
  return acc;
}

}  // namespace corpex
