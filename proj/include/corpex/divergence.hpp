#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "corpex/corpus.hpp"
#include "corpex/lexical.hpp"

namespace corpex {

using TokenizerFn = std::vector<Token> (*)(std::string_view);

// Raw word-frequency counts; probabilities are counts / total.  Words are
// case-sensitive and unstemmed.
struct FrequencyHistogram {
  std::unordered_map<std::string, int64_t> counts;
  int64_t total = 0;

  void add(std::string_view word, int64_t n = 1);
  double probability(std::string_view word) const;
};

// Counts every token occurrence across the paragraphs; throws DataError when
// the union contains no tokens.
FrequencyHistogram histogram(std::span<const Paragraph> paragraphs,
                             TokenizerFn tokenizer = tokenize);

enum class DivergenceMetric { Jsd, Variational };

std::string_view to_string(DivergenceMetric metric);

// Jensen-Shannon divergence, base-2 logarithm, range [0, 1].
double jsd(const FrequencyHistogram& p, const FrequencyHistogram& q);

// 1/2 * sum |p_w - q_w| in [0, 1]; raw_l1 returns the unnormalized sum
// (range [0, 2]).
double variational(const FrequencyHistogram& p, const FrequencyHistogram& q,
                   bool raw_l1 = false);

struct SelfDistanceResult {
  std::vector<double> trials;
  double mean = 0.0;
};

// Halving protocol: per trial, shuffle the paragraphs (seeded), histogram
// the first ceil(n/2) against the rest, measure.  Needs >= 2 paragraphs.
SelfDistanceResult self_distance(const Corpus& corpus, DivergenceMetric metric,
                                 uint64_t seed, int trials = 10);

enum class CorpusPart { All, Half1, Half2 };

std::string_view to_string(CorpusPart part);

struct MatrixLabel {
  std::string corpus;
  CorpusPart part;
};

struct DistanceMatrix {
  DivergenceMetric metric = DivergenceMetric::Jsd;
  std::vector<MatrixLabel> labels;
  // Symmetric; diagonal stored as 0 but rendered blank/null.
  std::vector<std::vector<double>> values;
};

// Rows/columns {all, half1, half2} for every corpus.  The halves come from
// one seeded split per corpus, derived from the corpus name, so the matrix
// is invariant (up to relabeling) under permutation of the input list.
DistanceMatrix distance_matrix(std::span<const Corpus> corpora,
                               DivergenceMetric metric, uint64_t seed,
                               bool raw_l1 = false);

std::string to_markdown(const DistanceMatrix& matrix);
std::string to_csv(const DistanceMatrix& matrix);
nlohmann::json to_json(const DistanceMatrix& matrix);

}  // namespace corpex
