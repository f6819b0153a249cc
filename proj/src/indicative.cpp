#include "corpex/indicative.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace corpex {

std::string_view to_string(IndicativeCounting counting) {
  return counting == IndicativeCounting::Tokens ? "tokens" : "documents";
}

IndicativeReport indicative_features(std::span<const LabeledParagraph> train,
                                     const std::string& class_a,
                                     const std::string& class_b, size_t k,
                                     IndicativeCounting counting) {
  IndicativeReport report;
  report.class_a = class_a;
  report.class_b = class_b;
  report.counting = counting;

  std::unordered_map<std::string, std::pair<uint64_t, uint64_t>> counts;
  for (const LabeledParagraph& ex : train) {
    bool in_a = ex.label == class_a;
    if (!in_a && ex.label != class_b) continue;
    if (counting == IndicativeCounting::Tokens) {
      for (const Token& tok : ex.paragraph.tokens) {
        auto& c = counts[tok.surface];
        (in_a ? c.first : c.second) += 1;
      }
    } else {
      std::set<std::string_view> seen;
      for (const Token& tok : ex.paragraph.tokens) seen.insert(tok.surface);
      for (std::string_view w : seen) {
        auto& c = counts[std::string(w)];
        (in_a ? c.first : c.second) += 1;
      }
    }
  }

  std::vector<IndicativeFeature> ranked;
  for (const auto& [word, c] : counts) {
    IndicativeFeature f{word, c.first, c.second, 0.0};
    if (c.first == 0) {
      report.only_b.push_back(std::move(f));
    } else if (c.second == 0) {
      report.only_a.push_back(std::move(f));
    } else {
      f.ratio = static_cast<double>(c.second) / static_cast<double>(c.first);
      ranked.push_back(std::move(f));
    }
  }

  auto ascending = [](const IndicativeFeature& x, const IndicativeFeature& y) {
    return x.ratio != y.ratio ? x.ratio < y.ratio : x.word < y.word;
  };
  auto descending = [](const IndicativeFeature& x, const IndicativeFeature& y) {
    return x.ratio != y.ratio ? x.ratio > y.ratio : x.word < y.word;
  };
  size_t take = std::min(k, ranked.size());
  std::sort(ranked.begin(), ranked.end(), ascending);
  report.lowest.assign(ranked.begin(), ranked.begin() + take);
  std::sort(ranked.begin(), ranked.end(), descending);
  report.highest.assign(ranked.begin(), ranked.begin() + take);

  auto by_count_a = [](const IndicativeFeature& x, const IndicativeFeature& y) {
    return x.count_a != y.count_a ? x.count_a > y.count_a : x.word < y.word;
  };
  auto by_count_b = [](const IndicativeFeature& x, const IndicativeFeature& y) {
    return x.count_b != y.count_b ? x.count_b > y.count_b : x.word < y.word;
  };
  std::sort(report.only_a.begin(), report.only_a.end(), by_count_a);
  std::sort(report.only_b.begin(), report.only_b.end(), by_count_b);
  return report;
}

}  // namespace corpex
