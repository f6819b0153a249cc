#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace corpex {

enum class Legality { Legal, Illegal, Unspecified };

std::string_view to_string(Legality v);
Legality legality_from_string(std::string_view s);  // throws ConfigError

struct DomainLabel {
  std::string name;
  Legality legality = Legality::Unspecified;
  bool operator==(const DomainLabel&) const = default;
};

// One text unit.  After cleaning, `text` is a single line: newlines are
// replaced by spaces and whitespace runs are collapsed.
struct Paragraph {
  std::string id;
  std::string site_id;
  DomainLabel domain;
  std::string text;
};

struct Corpus {
  DomainLabel domain;
  std::vector<Paragraph> paragraphs;
};

enum class CorpusFormat { JsonLines, TextDir };

using Warnings = std::vector<std::string>;

// Raw load, no cleaning.
//
// JsonLines: one JSON object per line with string fields id, site_id, domain
// and text; the domain field must equal `domain.name`.  TextDir: `path` is a
// directory, one file per site (site_id = filename without extension),
// paragraphs separated by blank lines, id = "<site_id>#<n>".  Text is run
// through sanitize_utf8; replacements are reported as warnings.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const DomainLabel& domain, Warnings* warnings = nullptr);

struct CleanOptions {
  bool strip_urls = true;       // http/https/ftp schemes and bare .onion hosts
  bool strip_key_blobs = true;  // long unbroken base64/hex-looking tokens
  size_t key_min_length = 40;
};

// Drops URL-ish and key-ish tokens, joins lines, collapses whitespace.
// Returns "" when nothing survives.  Idempotent, and never introduces
// characters that were not in the input (other than single spaces).
std::string clean_paragraph(std::string_view raw, const CleanOptions& opts = {});

struct CleanStats {
  size_t paragraphs_in = 0;
  size_t emptied = 0;     // cleaned to "" and dropped
  size_t duplicates = 0;  // removed by dedup_paragraphs (when composed)
  size_t paragraphs_out = 0;
};

// clean_paragraph over every paragraph; those that clean to "" are dropped.
Corpus clean_corpus(const Corpus& corpus, const CleanOptions& opts = {},
                    CleanStats* stats = nullptr);

// Near-duplicate key: digit runs masked with a placeholder, ASCII lowercased,
// whitespace collapsed.  "Only 5 left!" and "only  500 LEFT!" share a key.
std::string dedup_key(std::string_view text);

// Keeps the first paragraph per dedup key; order of survivors is unchanged.
Corpus dedup_paragraphs(const Corpus& corpus, size_t* removed = nullptr);

// Convenience: load + clean + dedup with a single stats record.
Corpus load_clean_corpus(const std::filesystem::path& path, CorpusFormat format,
                         const DomainLabel& domain, const CleanOptions& opts = {},
                         CleanStats* stats = nullptr, Warnings* warnings = nullptr);

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace corpex
