#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpex/corpus.hpp"

namespace corpex {

// A named-entity mention located inside a paragraph.  `start`/`end` are byte
// offsets into the paragraph text, and `surface` always equals the slice
// text[start, end).
struct EntityMention {
  std::string paragraph_id;
  std::string site_id;
  std::string surface;
  size_t start = 0;
  size_t end = 0;
  std::string type;  // provider-dependent tag; "" when the provider has none
};

class NerProvider {
 public:
  virtual ~NerProvider() = default;
  virtual std::vector<EntityMention> extract(const Paragraph& paragraph) = 0;
};

// Rule-based mention extractor.  Emits, per paragraph:
//   - runs of two or more adjacent capitalized/all-caps tokens (adjacent =
//     separated by spaces only), wherever they occur;
//   - single all-caps tokens of length >= 2;
//   - single capitalized tokens of length >= 2 that do not open a sentence.
// Produces no type tags.
class BaselineNer : public NerProvider {
 public:
  std::vector<EntityMention> extract(const Paragraph& paragraph) override;
};

// Runs the provider over every paragraph, in corpus order.
std::vector<EntityMention> extract_entities(const Corpus& corpus,
                                            NerProvider& ner);

// JSONL exchange format, one object per line:
//   {"paragraph_id": ..., "site_id": ..., "start": n, "end": n,
//    "surface": ..., "type": ...}
// Import is verbatim; only structural problems (missing fields, start > end)
// are rejected.
std::vector<EntityMention> load_mentions_jsonl(
    const std::filesystem::path& path);
void save_mentions_jsonl(std::span<const EntityMention> mentions,
                         const std::filesystem::path& path);

// Lookup key for a mention surface: ASCII punctuation trimmed from both
// ends, inner whitespace runs collapsed to single spaces.
std::string normalize_mention(std::string_view surface);

struct LinkResult {
  EntityMention mention;
  bool linked = false;
  std::optional<std::string> kb_id;    // present iff linked
  std::optional<double> confidence;    // backend score when available
};

// A knowledge base that can be asked whether it has an entry for a surface.
class KbClient {
 public:
  virtual ~KbClient() = default;
  // `normalized` comes from normalize_mention.  Returns the entry id and a
  // confidence in [0, 1] on a hit.  Must be safe to call concurrently.
  virtual std::optional<std::pair<std::string, double>> lookup(
      const std::string& normalized) = 0;
};

// Hermetic snapshot loaded from a TSV of "title<TAB>canonical_id" lines
// (blank lines and #-comments skipped).  Lookup tries a case-preserving
// match first, then an ASCII-lowercase fallback; hits report confidence 1.
class OfflineKb : public KbClient {
 public:
  static OfflineKb from_tsv(const std::filesystem::path& path);
  static OfflineKb from_entries(
      const std::vector<std::pair<std::string, std::string>>& entries);

  std::optional<std::pair<std::string, double>> lookup(
      const std::string& normalized) override;

  size_t size() const { return exact_.size(); }

 private:
  std::unordered_map<std::string, std::string> exact_;
  std::unordered_map<std::string, std::string> lowered_;
};

struct HttpKbOptions {
  std::string base_url;                // e.g. "http://127.0.0.1:8080"
  std::string path = "/rest/annotate";
  double confidence = 0.5;             // minimum score to count as linked
  int max_retries = 3;                 // extra attempts after the first
  int backoff_initial_ms = 100;        // doubles on every retry
  int timeout_seconds = 10;
  int min_request_interval_ms = 0;     // per-host rate limit; 0 = off
};

// Client for a DBpedia-Spotlight-compatible annotate endpoint: GET with
// `text` and `confidence` query parameters, JSON response carrying a
// "Resources" list of {"@URI", "@surfaceForm", "@similarityScore"} objects.
// Transport errors, 429 and 5xx are retried with exponential backoff and
// surfaced as NetworkError once retries are exhausted; other failures and
// unparseable bodies raise NetworkError immediately.
class HttpKb : public KbClient {
 public:
  explicit HttpKb(HttpKbOptions options);

  std::optional<std::pair<std::string, double>> lookup(
      const std::string& normalized) override;

 private:
  HttpKbOptions options_;
  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point last_request_;
  bool any_request_ = false;
};

// Links mentions through a KbClient, caching by normalized surface so each
// distinct surface reaches the backend exactly once.  `workers` bounds the
// number of concurrent backend calls; results do not depend on it.
class LinkEngine {
 public:
  explicit LinkEngine(KbClient& client) : client_(&client) {}

  LinkResult link(const EntityMention& mention);
  std::vector<LinkResult> link_all(std::span<const EntityMention> mentions,
                                   size_t workers = 1);

  size_t backend_calls() const { return backend_calls_; }

 private:
  using Hit = std::optional<std::pair<std::string, double>>;
  Hit resolve(const std::string& key);
  static LinkResult assemble(const EntityMention& mention, const Hit& hit);

  KbClient* client_;
  std::mutex mutex_;
  std::unordered_map<std::string, Hit> cache_;
  size_t backend_calls_ = 0;
};

void save_links_jsonl(std::span<const LinkResult> links,
                      const std::filesystem::path& path);

// Whether a site's percentage counts every mention occurrence or each
// distinct normalized surface once.
enum class CoverageCounting { PerMention, PerType };

std::string_view to_string(CoverageCounting c);
CoverageCounting coverage_counting_from_string(std::string_view s);

struct SiteCoverage {
  std::string site_id;
  size_t total = 0;
  size_t linked = 0;
  double percent = 0.0;  // 100 * linked / total
};

struct DomainCoverage {
  std::string domain;
  std::vector<SiteCoverage> sites;  // sorted by site_id
  double mean_percent = 0.0;        // mean of per-site percentages
  double standard_error = 0.0;      // sample std (n-1) / sqrt(n); 0 when n=1
  bool single_site = false;         // SE not meaningful for one site
};

struct CoverageReport {
  CoverageCounting counting = CoverageCounting::PerMention;
  std::vector<DomainCoverage> domains;  // sorted by domain name
  Warnings warnings;                    // zero-mention site exclusions
};

// `site_to_domain` is the site inventory: every link's site must appear in
// it, and inventory sites that contributed no mentions are excluded with a
// warning.  A domain left with no sites is a DataError.
CoverageReport coverage_report(
    std::span<const LinkResult> links,
    const std::map<std::string, std::string>& site_to_domain,
    CoverageCounting counting = CoverageCounting::PerMention);

nlohmann::json to_json(const CoverageReport& report);

// Two-column table: domain, "mean ± se" (one and two decimals).
std::string coverage_markdown(const CoverageReport& report);

}  // namespace corpex
