#include "corpex/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"

namespace corpex {

using nlohmann::json;

void FrequencyHistogram::add(std::string_view word, int64_t n) {
  counts[std::string(word)] += n;
  total += n;
}

double FrequencyHistogram::probability(std::string_view word) const {
  if (total <= 0) return 0.0;
  auto it = counts.find(std::string(word));
  return it == counts.end() ? 0.0
                            : static_cast<double>(it->second) /
                                  static_cast<double>(total);
}

FrequencyHistogram histogram(std::span<const Paragraph> paragraphs,
                             TokenizerFn tokenizer) {
  FrequencyHistogram hist;
  for (const Paragraph& p : paragraphs) {
    for (const Token& t : tokenizer(p.text)) hist.add(t.surface);
  }
  if (hist.total == 0)
    throw DataError("histogram over an empty corpus (no tokens)");
  return hist;
}

std::string_view to_string(DivergenceMetric metric) {
  return metric == DivergenceMetric::Jsd ? "jsd" : "variational";
}

namespace {

void require_nonempty(const FrequencyHistogram& h, const char* side) {
  if (h.total <= 0)
    throw DataError(std::string("empty histogram on ") + side + " side");
}

}  // namespace

double jsd(const FrequencyHistogram& p, const FrequencyHistogram& q) {
  require_nonempty(p, "left");
  require_nonempty(q, "right");
  const double pt = static_cast<double>(p.total);
  const double qt = static_cast<double>(q.total);
  double acc = 0.0;
  for (const auto& [word, count] : p.counts) {
    double pw = static_cast<double>(count) / pt;
    auto it = q.counts.find(word);
    double qw = it == q.counts.end()
                    ? 0.0
                    : static_cast<double>(it->second) / qt;
    double m = 0.5 * (pw + qw);
    if (pw > 0.0) acc += 0.5 * pw * std::log2(pw / m);
    if (qw > 0.0) acc += 0.5 * qw * std::log2(qw / m);
  }
  // Words only q has: p_w = 0, so the midpoint is q_w/2 and the q-side term
  // reduces to 0.5 * q_w * log2(2) = 0.5 * q_w.
  for (const auto& [word, count] : q.counts) {
    if (p.counts.find(word) == p.counts.end())
      acc += 0.5 * static_cast<double>(count) / qt;
  }
  return std::max(acc, 0.0);  // guard the 1e-17 float dust below zero
}

double variational(const FrequencyHistogram& p, const FrequencyHistogram& q,
                   bool raw_l1) {
  require_nonempty(p, "left");
  require_nonempty(q, "right");
  const double pt = static_cast<double>(p.total);
  const double qt = static_cast<double>(q.total);
  double acc = 0.0;
  for (const auto& [word, count] : p.counts) {
    double pw = static_cast<double>(count) / pt;
    auto it = q.counts.find(word);
    double qw = it == q.counts.end()
                    ? 0.0
                    : static_cast<double>(it->second) / qt;
    acc += std::abs(pw - qw);
  }
  for (const auto& [word, count] : q.counts) {
    if (p.counts.find(word) == p.counts.end())
      acc += static_cast<double>(count) / qt;
  }
  return raw_l1 ? acc : 0.5 * acc;
}

namespace {

double measure(const FrequencyHistogram& p, const FrequencyHistogram& q,
               DivergenceMetric metric, bool raw_l1) {
  return metric == DivergenceMetric::Jsd ? jsd(p, q)
                                         : variational(p, q, raw_l1);
}

struct Halves {
  std::vector<const Paragraph*> half1, half2;
};

// First ceil(n/2) of the shuffled order vs. the rest; the extra paragraph of
// an odd corpus lands in half1.
Halves split_halves(const Corpus& corpus, Rng& rng) {
  std::vector<size_t> order(corpus.paragraphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cut = (order.size() + 1) / 2;
  Halves halves;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < cut ? halves.half1 : halves.half2)
        .push_back(&corpus.paragraphs[order[i]]);
  }
  return halves;
}

FrequencyHistogram histogram_ptrs(const std::vector<const Paragraph*>& part) {
  FrequencyHistogram hist;
  for (const Paragraph* p : part) {
    for (const Token& t : tokenize(p->text)) hist.add(t.surface);
  }
  if (hist.total == 0)
    throw DataError("histogram over an empty corpus half (no tokens)");
  return hist;
}

}  // namespace

SelfDistanceResult self_distance(const Corpus& corpus, DivergenceMetric metric,
                                 uint64_t seed, int trials) {
  if (corpus.paragraphs.size() < 2)
    throw DataError("self-distance needs at least 2 paragraphs, corpus '" +
                    corpus.domain.name + "' has " +
                    std::to_string(corpus.paragraphs.size()));
  if (trials < 1) throw ConfigError("self-distance trials must be >= 1");
  Rng rng = Rng::derive(seed, "self-distance:" + corpus.domain.name);
  SelfDistanceResult result;
  for (int t = 0; t < trials; ++t) {
    Halves halves = split_halves(corpus, rng);
    result.trials.push_back(measure(histogram_ptrs(halves.half1),
                                    histogram_ptrs(halves.half2), metric,
                                    /*raw_l1=*/false));
  }
  double sum = 0.0;
  for (double v : result.trials) sum += v;
  result.mean = sum / static_cast<double>(result.trials.size());
  return result;
}

std::string_view to_string(CorpusPart part) {
  switch (part) {
    case CorpusPart::All: return "all";
    case CorpusPart::Half1: return "half1";
    case CorpusPart::Half2: return "half2";
  }
  return "all";
}

DistanceMatrix distance_matrix(std::span<const Corpus> corpora,
                               DivergenceMetric metric, uint64_t seed,
                               bool raw_l1) {
  DistanceMatrix matrix;
  matrix.metric = metric;
  std::vector<FrequencyHistogram> hists;
  for (const Corpus& corpus : corpora) {
    if (corpus.paragraphs.size() < 2)
      throw DataError("distance matrix needs >= 2 paragraphs per corpus, '" +
                      corpus.domain.name + "' has " +
                      std::to_string(corpus.paragraphs.size()));
    // One split per corpus, keyed by its name: the matrix then does not
    // depend on the order corpora were listed in.
    Rng rng = Rng::derive(seed, "halves:" + corpus.domain.name);
    Halves halves = split_halves(corpus, rng);
    matrix.labels.push_back({corpus.domain.name, CorpusPart::All});
    matrix.labels.push_back({corpus.domain.name, CorpusPart::Half1});
    matrix.labels.push_back({corpus.domain.name, CorpusPart::Half2});
    hists.push_back(histogram(corpus.paragraphs));
    hists.push_back(histogram_ptrs(halves.half1));
    hists.push_back(histogram_ptrs(halves.half2));
  }
  size_t n = hists.size();
  matrix.values.assign(n, std::vector<double>(n, 0.0));
  auto label_key = [&](size_t i) {
    return std::pair<std::string_view, int>(
        matrix.labels[i].corpus, static_cast<int>(matrix.labels[i].part));
  };
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      // Fix the argument order by label, not list position: float summation
      // order then never depends on how the corpora were listed, and the
      // matrix is bit-identical under input permutation.
      double d = label_key(i) <= label_key(j)
                     ? measure(hists[i], hists[j], metric, raw_l1)
                     : measure(hists[j], hists[i], metric, raw_l1);
      matrix.values[i][j] = d;
      matrix.values[j][i] = d;  // computed once, mirrored exactly
    }
  }
  return matrix;
}

namespace {

std::string label_text(const MatrixLabel& label) {
  return label.corpus + " (" + std::string(to_string(label.part)) + ")";
}

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string to_markdown(const DistanceMatrix& matrix) {
  std::string out = "| ";
  for (const MatrixLabel& l : matrix.labels) out += " | " + label_text(l);
  out += " |\n|---";
  for (size_t i = 0; i < matrix.labels.size(); ++i) out += "|---";
  out += "|\n";
  for (size_t i = 0; i < matrix.labels.size(); ++i) {
    out += "| " + label_text(matrix.labels[i]);
    for (size_t j = 0; j < matrix.labels.size(); ++j) {
      out += " | ";
      out += i == j ? "" : format_cell(matrix.values[i][j]);
    }
    out += " |\n";
  }
  return out;
}

std::string to_csv(const DistanceMatrix& matrix) {
  std::string out = "label";
  for (const MatrixLabel& l : matrix.labels) out += "," + label_text(l);
  out += "\n";
  for (size_t i = 0; i < matrix.labels.size(); ++i) {
    out += label_text(matrix.labels[i]);
    for (size_t j = 0; j < matrix.labels.size(); ++j) {
      out += ",";
      // Full precision via the shortest round-trip representation.
      if (i != j) out += json(matrix.values[i][j]).dump();
    }
    out += "\n";
  }
  return out;
}

json to_json(const DistanceMatrix& matrix) {
  json labels = json::array();
  for (const MatrixLabel& l : matrix.labels)
    labels.push_back({{"corpus", l.corpus}, {"part", to_string(l.part)}});
  json values = json::array();
  for (size_t i = 0; i < matrix.values.size(); ++i) {
    json row = json::array();
    for (size_t j = 0; j < matrix.values.size(); ++j) {
      if (i == j)
        row.push_back(nullptr);
      else
        row.push_back(matrix.values[i][j]);
    }
    values.push_back(row);
  }
  return {{"metric", to_string(matrix.metric)},
          {"labels", labels},
          {"values", values}};
}

}  // namespace corpex
