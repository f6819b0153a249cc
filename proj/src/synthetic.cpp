#include "corpex/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/text.hpp"

namespace corpex {

namespace {

// Bijective base-26 over a..z: 0 -> "a", 25 -> "z", 26 -> "aa", ...
std::string base26(size_t k) {
  std::string s;
  ++k;
  while (k > 0) {
    --k;
    s += static_cast<char>('a' + k % 26);
    k /= 26;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

std::string pool_word(const std::string& topic, Upos tag, size_t k,
                      size_t shared_count) {
  std::string tag_part = ascii_lower(std::string(to_string(tag)));
  if (k < shared_count) return "sh" + tag_part + base26(k);
  return topic + tag_part + base26(k);
}

std::string marker_word(Legality legality, size_t k) {
  return (legality == Legality::Illegal ? "illmark" : "legmark") + base26(k);
}

void validate(const SyntheticSpec& spec) {
  if (spec.domains.empty()) throw ConfigError("synthetic spec has no domains");
  std::set<std::string> names;
  for (const SyntheticDomain& d : spec.domains) {
    if (d.name.empty()) throw ConfigError("synthetic domain name is empty");
    if (!names.insert(d.name).second)
      throw ConfigError("duplicate synthetic domain name: " + d.name);
    if (d.topic.empty())
      throw ConfigError("synthetic domain " + d.name + " has no topic");
    for (char ch : d.topic)
      if (!is_ascii_alpha(ch) || is_ascii_upper(ch))
        throw ConfigError("synthetic topic must be lowercase letters: " +
                          d.topic);
    if (d.paragraphs == 0)
      throw ConfigError("synthetic domain " + d.name + " has no paragraphs");
    if (d.sites == 0)
      throw ConfigError("synthetic domain " + d.name + " has no sites");
    double weight_sum = 0.0;
    for (const auto& [tag, w] : d.pos_profile) {
      if (w < 0.0)
        throw ConfigError("negative POS weight in domain " + d.name);
      weight_sum += w;
    }
    if (weight_sum <= 0.0)
      throw ConfigError("POS profile of domain " + d.name +
                        " has no positive weight");
  }
  if (spec.lexicon_size_per_tag == 0)
    throw ConfigError("lexicon_size_per_tag must be >= 1");
  if (spec.shared_fraction < 0.0 || spec.shared_fraction > 1.0)
    throw ConfigError("shared_fraction must be in [0, 1]");
  if (spec.marker_rate < 0.0 || spec.marker_rate > 1.0)
    throw ConfigError("marker_rate must be in [0, 1]");
  if (spec.marker_rate > 0.0 && spec.marker_words == 0)
    throw ConfigError("marker_rate > 0 needs marker_words >= 1");
  if (spec.length_min == 0 || spec.length_min > spec.length_max)
    throw ConfigError("paragraph length range is invalid");
}

}  // namespace

SyntheticResult generate_synthetic_corpus(const SyntheticSpec& spec,
                                          uint64_t seed) {
  validate(spec);
  const size_t pool_size = spec.lexicon_size_per_tag;
  const size_t shared_count = static_cast<size_t>(
      std::llround(spec.shared_fraction * static_cast<double>(pool_size)));

  SyntheticResult result;
  for (const SyntheticDomain& d : spec.domains) {
    // tags with positive weight, in enum order, with cumulative weights
    std::vector<Upos> tags;
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const auto& [tag, w] : d.pos_profile) {
      if (w <= 0.0) continue;
      tags.push_back(tag);
      acc += w;
      cumulative.push_back(acc);
    }

    std::vector<Token> prefix;
    if (spec.coverage_prefix) {
      for (Upos tag : tags)
        for (size_t k = 0; k < pool_size; ++k)
          prefix.push_back({pool_word(d.topic, tag, k, shared_count), tag});
    }

    bool markers = spec.marker_rate > 0.0 && d.legality != Legality::Unspecified;
    Rng rng = Rng::derive(seed, "synth:" + d.name);
    SyntheticDomainData data;
    data.corpus.domain = {d.name, d.legality};
    for (size_t p = 0; p < d.paragraphs; ++p) {
      std::vector<Token> tokens = prefix;
      size_t len = spec.length_min +
                   rng.below(spec.length_max - spec.length_min + 1);
      for (size_t i = 0; i < len; ++i) {
        double r = rng.next_double() * acc;
        size_t pick = 0;
        while (pick + 1 < cumulative.size() && r >= cumulative[pick]) ++pick;
        Upos tag = tags[pick];
        if (tag == Upos::NOUN && markers &&
            rng.next_double() < spec.marker_rate) {
          tokens.push_back(
              {marker_word(d.legality, rng.below(spec.marker_words)), tag});
        } else {
          tokens.push_back(
              {pool_word(d.topic, tag, rng.below(pool_size), shared_count),
               tag});
        }
      }

      std::string id = d.name + "#" + std::to_string(p + 1);
      std::string site = d.name + "-s" + std::to_string(1 + p % d.sites);
      std::string text;
      for (const Token& t : tokens) {
        if (!text.empty()) text += ' ';
        text += t.surface;
      }
      data.corpus.paragraphs.push_back(
          {id, site, data.corpus.domain, std::move(text)});
      data.tagged.push_back({id, std::move(tokens)});
    }
    result.domains.push_back(std::move(data));
  }
  return result;
}

std::vector<LabeledParagraph> labeled_examples(
    const SyntheticDomainData& data) {
  std::vector<LabeledParagraph> out;
  out.reserve(data.tagged.size());
  std::string label(to_string(data.corpus.domain.legality));
  for (size_t i = 0; i < data.tagged.size(); ++i)
    out.push_back({data.tagged[i], label, data.corpus.paragraphs[i].site_id});
  return out;
}

std::vector<std::pair<std::string, std::vector<double>>> synthetic_embeddings(
    const SyntheticResult& result, size_t dim, uint64_t seed) {
  if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
  std::set<std::string> words;
  for (const SyntheticDomainData& d : result.domains)
    for (const TaggedParagraph& p : d.tagged)
      for (const Token& t : p.tokens) words.insert(t.surface);

  std::vector<std::pair<std::string, std::vector<double>>> out;
  out.reserve(words.size());
  for (const std::string& w : words) {
    Rng rng = Rng::derive(seed, "embed:" + w);
    std::vector<double> vec(dim);
    for (double& v : vec) v = rng.normal(0.0, 1.0);
    out.emplace_back(w, std::move(vec));
  }
  return out;
}

}  // namespace corpex
