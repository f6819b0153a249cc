#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corpex/dataset.hpp"

namespace corpex {

// How a word's per-class occurrence count is measured: every token, or the
// number of paragraphs containing it at least once.
enum class IndicativeCounting { Tokens, Documents };

std::string_view to_string(IndicativeCounting counting);

struct IndicativeFeature {
  std::string word;
  uint64_t count_a = 0;
  uint64_t count_b = 0;
  double ratio = 0.0;  // count_b / count_a; meaningful when both counts > 0

  bool operator==(const IndicativeFeature&) const = default;
};

struct IndicativeReport {
  std::string class_a;
  std::string class_b;
  IndicativeCounting counting = IndicativeCounting::Tokens;
  std::vector<IndicativeFeature> lowest;   // k smallest ratios, ascending
  std::vector<IndicativeFeature> highest;  // k largest ratios, descending
  // Words seen in exactly one class are unrankable (a zero denominator or a
  // zero ratio ties everything); they are reported here, most frequent first.
  std::vector<IndicativeFeature> only_a;
  std::vector<IndicativeFeature> only_b;
};

// Ranks vocabulary by how lopsided its usage is between the two classes.
// Only paragraphs labeled class_a or class_b contribute.  Ties in ratio are
// broken by word order so the report is stable across runs.
IndicativeReport indicative_features(
    std::span<const LabeledParagraph> train, const std::string& class_a,
    const std::string& class_b, size_t k,
    IndicativeCounting counting = IndicativeCounting::Tokens);

}  // namespace corpex
