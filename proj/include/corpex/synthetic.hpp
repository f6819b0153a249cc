#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "corpex/corpus.hpp"
#include "corpex/dataset.hpp"
#include "corpex/lexical.hpp"

namespace corpex {

// Hermetic stand-in for the (restricted) crawled corpora: every word is a
// template with a fixed POS tag, drawn from per-(topic, tag) pools, so
// generated data comes with gold tags attached.
struct SyntheticDomain {
  std::string name;
  Legality legality = Legality::Unspecified;
  // Domains sharing a topic share the same word pools; distinct topics get
  // disjoint pools except for the shared slice below.
  std::string topic;
  std::map<Upos, double> pos_profile;  // sampling weight per tag
  size_t paragraphs = 200;
  size_t sites = 5;
};

struct SyntheticSpec {
  std::vector<SyntheticDomain> domains;
  size_t lexicon_size_per_tag = 30;
  // Fraction of every (topic, tag) pool that is topic-independent, i.e.
  // common vocabulary across topics.  1.0 makes all topics share one
  // lexicon; 0.0 makes topic vocabularies disjoint.
  double shared_fraction = 0.0;
  size_t length_min = 20;  // uniform paragraph length, in sampled tokens
  size_t length_max = 60;
  // Chance that a NOUN slot emits a legality-marker word instead of a topic
  // word.  Marker pools are shared by every domain with the same legality,
  // which is what makes cross-topic transfer learnable.
  double marker_rate = 0.0;
  size_t marker_words = 8;
  // Prepend one occurrence of every pool word the domain can sample, making
  // presence features identical across paragraphs (frequency information
  // stays intact).
  bool coverage_prefix = false;
};

struct SyntheticDomainData {
  Corpus corpus;
  std::vector<TaggedParagraph> tagged;  // gold tags, aligned with paragraphs
};

struct SyntheticResult {
  std::vector<SyntheticDomainData> domains;
};

// Deterministic under (spec, seed); every domain draws from its own
// sub-stream, so adding a domain never perturbs the others.
SyntheticResult generate_synthetic_corpus(const SyntheticSpec& spec,
                                          uint64_t seed);

// Classification view of one generated domain: label = legality string,
// paragraphs carry their gold tags.
std::vector<LabeledParagraph> labeled_examples(const SyntheticDomainData& data);

// Word vectors for every surface in the result, drawn N(0,1) per dimension
// from a per-word sub-stream; sorted by word.
std::vector<std::pair<std::string, std::vector<double>>> synthetic_embeddings(
    const SyntheticResult& result, size_t dim, uint64_t seed);

}  // namespace corpex
