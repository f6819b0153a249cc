#include "corpex/wikify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "corpex/errors.hpp"
#include "corpex/text.hpp"

namespace corpex {

namespace {

struct NerToken {
  size_t start = 0;
  size_t end = 0;
  bool sentence_initial = false;
};

bool word_char(unsigned char c) {
  return is_ascii_alpha(static_cast<char>(c)) ||
         is_ascii_digit(static_cast<char>(c)) || c >= 0x80 || c == '\'' ||
         c == '-';
}

bool core_char(unsigned char c) { return word_char(c) && c != '\'' && c != '-'; }

// A token opens a sentence when only spaces and closing quotes/brackets
// separate it from the previous '.', '!' or '?' (or the paragraph start).
bool opens_sentence(std::string_view text, size_t start) {
  size_t i = start;
  while (i > 0 && is_space(text[i - 1])) --i;
  while (i > 0 && (text[i - 1] == '"' || text[i - 1] == '\'' ||
                   text[i - 1] == ')' || text[i - 1] == ']'))
    --i;
  if (i == 0) return true;
  char prev = text[i - 1];
  return prev == '.' || prev == '!' || prev == '?';
}

std::vector<NerToken> ner_tokens(std::string_view text) {
  std::vector<NerToken> tokens;
  size_t i = 0;
  while (i < text.size()) {
    if (!word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    size_t begin = i;
    while (i < text.size() && word_char(static_cast<unsigned char>(text[i])))
      ++i;
    size_t end = i;
    // strip apostrophes/hyphens hanging off the edges
    while (begin < end && !core_char(static_cast<unsigned char>(text[begin])))
      ++begin;
    while (end > begin && !core_char(static_cast<unsigned char>(text[end - 1])))
      --end;
    if (begin == end) continue;
    tokens.push_back({begin, end, opens_sentence(text, begin)});
  }
  return tokens;
}

bool all_caps(std::string_view t) {
  if (t.size() < 2) return false;
  bool has_alpha = false;
  for (char c : t) {
    if (!is_ascii_alpha(c)) continue;
    if (!is_ascii_upper(c)) return false;
    has_alpha = true;
  }
  return has_alpha;
}

bool capitalish(std::string_view t) {
  return !t.empty() && is_ascii_upper(t[0]);
}

std::string format_percent(double value, int decimals) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(decimals);
  out << value;
  return out.str();
}

}  // namespace

std::vector<EntityMention> BaselineNer::extract(const Paragraph& paragraph) {
  const std::string& text = paragraph.text;
  std::vector<NerToken> tokens = ner_tokens(text);
  std::vector<EntityMention> mentions;

  auto emit = [&](size_t start, size_t end) {
    mentions.push_back({paragraph.id, paragraph.site_id,
                        text.substr(start, end - start), start, end, ""});
  };
  auto view = [&](const NerToken& t) {
    return std::string_view(text).substr(t.start, t.end - t.start);
  };
  auto adjacent = [&](const NerToken& a, const NerToken& b) {
    if (b.start <= a.end) return false;
    for (size_t k = a.end; k < b.start; ++k)
      if (!is_space(text[k])) return false;
    return true;
  };

  size_t i = 0;
  while (i < tokens.size()) {
    if (!capitalish(view(tokens[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < tokens.size() && capitalish(view(tokens[j + 1])) &&
           adjacent(tokens[j], tokens[j + 1]))
      ++j;
    if (j > i) {
      emit(tokens[i].start, tokens[j].end);
    } else {
      std::string_view t = view(tokens[i]);
      if (all_caps(t) || (t.size() >= 2 && !tokens[i].sentence_initial))
        emit(tokens[i].start, tokens[i].end);
    }
    i = j + 1;
  }
  return mentions;
}

std::vector<EntityMention> extract_entities(const Corpus& corpus,
                                            NerProvider& ner) {
  std::vector<EntityMention> all;
  for (const Paragraph& p : corpus.paragraphs) {
    std::vector<EntityMention> found = ner.extract(p);
    all.insert(all.end(), std::make_move_iterator(found.begin()),
               std::make_move_iterator(found.end()));
  }
  return all;
}

std::vector<EntityMention> load_mentions_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mention file: " + path.string());
  std::vector<EntityMention> mentions;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    std::string where = "mention file line " + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object())
      throw DataError(where + ": not a JSON object");
    for (const char* field : {"paragraph_id", "site_id", "surface"})
      if (!j.contains(field) || !j[field].is_string())
        throw DataError(where + ": missing string field '" +
                        std::string(field) + "'");
    for (const char* field : {"start", "end"})
      if (!j.contains(field) || !j[field].is_number_unsigned())
        throw DataError(where + ": missing non-negative field '" +
                        std::string(field) + "'");
    EntityMention m;
    m.paragraph_id = j["paragraph_id"].get<std::string>();
    m.site_id = j["site_id"].get<std::string>();
    m.surface = j["surface"].get<std::string>();
    m.start = j["start"].get<size_t>();
    m.end = j["end"].get<size_t>();
    if (m.start > m.end) throw DataError(where + ": start exceeds end");
    if (j.contains("type")) {
      if (!j["type"].is_string())
        throw DataError(where + ": field 'type' must be a string");
      m.type = j["type"].get<std::string>();
    }
    mentions.push_back(std::move(m));
  }
  return mentions;
}

void save_mentions_jsonl(std::span<const EntityMention> mentions,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write mention file: " + path.string());
  for (const EntityMention& m : mentions) {
    nlohmann::json j{{"paragraph_id", m.paragraph_id},
                     {"site_id", m.site_id},
                     {"start", m.start},
                     {"end", m.end},
                     {"surface", m.surface},
                     {"type", m.type}};
    out << j.dump() << '\n';
  }
}

std::string normalize_mention(std::string_view surface) {
  auto trimmable = [](unsigned char c) {
    return c < 0x80 && !is_ascii_alpha(static_cast<char>(c)) &&
           !is_ascii_digit(static_cast<char>(c));
  };
  size_t b = 0;
  size_t e = surface.size();
  while (b < e && trimmable(static_cast<unsigned char>(surface[b]))) ++b;
  while (e > b && trimmable(static_cast<unsigned char>(surface[e - 1]))) --e;
  return collapse_whitespace(surface.substr(b, e - b));
}

OfflineKb OfflineKb::from_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open kb snapshot: " + path.string());
  OfflineKb kb;
  std::string line;
  size_t lineno = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
      throw DataError("kb snapshot line " + std::to_string(lineno) +
                      ": expected title<TAB>id");
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_entries(entries);
}

OfflineKb OfflineKb::from_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  OfflineKb kb;
  for (const auto& [title, id] : entries) {
    if (title.empty() || id.empty())
      throw DataError("kb entries must have a non-empty title and id");
    kb.exact_.emplace(title, id);      // first entry for a title wins
    kb.lowered_.emplace(ascii_lower(title), id);
  }
  return kb;
}

std::optional<std::pair<std::string, double>> OfflineKb::lookup(
    const std::string& normalized) {
  if (auto it = exact_.find(normalized); it != exact_.end())
    return std::make_pair(it->second, 1.0);
  if (auto it = lowered_.find(ascii_lower(normalized)); it != lowered_.end())
    return std::make_pair(it->second, 1.0);
  return std::nullopt;
}

HttpKb::HttpKb(HttpKbOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty())
    throw ConfigError("http kb: base_url is required");
  if (options_.confidence < 0.0 || options_.confidence > 1.0)
    throw ConfigError("http kb: confidence must be in [0, 1]");
  if (options_.max_retries < 0)
    throw ConfigError("http kb: max_retries must be >= 0");
}

std::optional<std::pair<std::string, double>> HttpKb::lookup(
    const std::string& normalized) {
  auto rate_wait = [&] {
    if (options_.min_request_interval_ms <= 0) return;
    // the lock is held across the wait so concurrent callers queue up
    std::unique_lock<std::mutex> lock(rate_mutex_);
    auto now = std::chrono::steady_clock::now();
    if (any_request_) {
      auto next_ok = last_request_ + std::chrono::milliseconds(
                                         options_.min_request_interval_ms);
      if (now < next_ok) {
        std::this_thread::sleep_until(next_ok);
        now = std::chrono::steady_clock::now();
      }
    }
    last_request_ = now;
    any_request_ = true;
  };

  std::string last_error;
  int delay_ms = options_.backoff_initial_ms;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
    rate_wait();

    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    httplib::Params params{
        {"text", normalized},
        {"confidence", format_percent(options_.confidence, 3)}};
    httplib::Headers headers{{"Accept", "application/json"}};
    httplib::Result res = client.Get(options_.path, params, headers);

    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;  // retryable
    }
    if (res->status != 200)
      throw NetworkError("kb endpoint returned status " +
                         std::to_string(res->status));

    nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
      throw NetworkError("kb endpoint returned a malformed response");
    if (!body.contains("Resources")) return std::nullopt;  // nothing found
    if (!body["Resources"].is_array())
      throw NetworkError("kb endpoint returned a malformed response");

    // best-scoring resource whose surface form matches ours
    std::optional<std::pair<std::string, double>> best;
    for (const nlohmann::json& r : body["Resources"]) {
      if (!r.is_object() || !r.contains("@URI") || !r.contains("@surfaceForm"))
        throw NetworkError("kb endpoint returned a malformed resource");
      if (ascii_lower(r["@surfaceForm"].get<std::string>()) !=
          ascii_lower(normalized))
        continue;
      double score = 1.0;
      if (r.contains("@similarityScore")) {
        const nlohmann::json& s = r["@similarityScore"];
        score = s.is_string() ? std::stod(s.get<std::string>())
                              : s.get<double>();
      }
      if (score < options_.confidence) continue;
      if (!best || score > best->second)
        best = std::make_pair(r["@URI"].get<std::string>(), score);
    }
    return best;
  }
  throw NetworkError("kb endpoint unreachable after " +
                     std::to_string(options_.max_retries + 1) +
                     " attempts (" + last_error + ")");
}

LinkEngine::Hit LinkEngine::resolve(const std::string& key) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  Hit hit = client_->lookup(key);
  std::lock_guard<std::mutex> lock(mutex_);
  ++backend_calls_;
  return cache_.emplace(key, hit).first->second;
}

LinkResult LinkEngine::assemble(const EntityMention& mention, const Hit& hit) {
  LinkResult result;
  result.mention = mention;
  result.linked = hit.has_value();
  if (hit) {
    result.kb_id = hit->first;
    result.confidence = hit->second;
  }
  return result;
}

LinkResult LinkEngine::link(const EntityMention& mention) {
  return assemble(mention, resolve(normalize_mention(mention.surface)));
}

std::vector<LinkResult> LinkEngine::link_all(
    std::span<const EntityMention> mentions, size_t workers) {
  // Dedup up front so each distinct surface costs one backend call no
  // matter how many workers race over the list.
  std::vector<std::string> keys;
  keys.reserve(mentions.size());
  for (const EntityMention& m : mentions)
    keys.push_back(normalize_mention(m.surface));

  std::vector<std::string> pending;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    std::set<std::string> seen;
    for (const std::string& key : keys)
      if (!cache_.count(key) && seen.insert(key).second) pending.push_back(key);
  }

  std::vector<Hit> hits(pending.size());
  std::vector<std::exception_ptr> failures(pending.size());
  if (workers <= 1 || pending.size() <= 1) {
    for (size_t i = 0; i < pending.size(); ++i) {
      try {
        hits[i] = client_->lookup(pending[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<size_t> next{0};
    std::atomic<bool> abort{false};
    auto run = [&] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= pending.size() || abort.load()) return;
        try {
          hits[i] = client_->lookup(pending[i]);
        } catch (...) {
          failures[i] = std::current_exception();
          abort.store(true);
        }
      }
    };
    std::vector<std::thread> pool;
    size_t n = std::min(workers, pending.size());
    pool.reserve(n);
    for (size_t t = 0; t < n; ++t) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& failure : failures)
    if (failure) std::rethrow_exception(failure);

  std::vector<LinkResult> results;
  results.reserve(mentions.size());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (size_t i = 0; i < pending.size(); ++i)
      cache_.emplace(pending[i], hits[i]);
    backend_calls_ += pending.size();
    for (size_t i = 0; i < mentions.size(); ++i)
      results.push_back(assemble(mentions[i], cache_.at(keys[i])));
  }
  return results;
}

void save_links_jsonl(std::span<const LinkResult> links,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write link file: " + path.string());
  for (const LinkResult& lr : links) {
    nlohmann::json j{{"paragraph_id", lr.mention.paragraph_id},
                     {"site_id", lr.mention.site_id},
                     {"surface", lr.mention.surface},
                     {"linked", lr.linked}};
    if (lr.kb_id) j["kb_id"] = *lr.kb_id;
    if (lr.confidence) j["confidence"] = *lr.confidence;
    out << j.dump() << '\n';
  }
}

std::string_view to_string(CoverageCounting c) {
  return c == CoverageCounting::PerMention ? "per-mention" : "per-type";
}

CoverageCounting coverage_counting_from_string(std::string_view s) {
  if (s == "per-mention") return CoverageCounting::PerMention;
  if (s == "per-type") return CoverageCounting::PerType;
  throw ConfigError("unknown coverage counting: '" + std::string(s) + "'");
}

CoverageReport coverage_report(
    std::span<const LinkResult> links,
    const std::map<std::string, std::string>& site_to_domain,
    CoverageCounting counting) {
  struct SiteAgg {
    size_t total = 0;
    size_t linked = 0;
    std::map<std::string, bool> types;  // normalized surface -> any link
  };
  std::map<std::string, SiteAgg> per_site;
  for (const LinkResult& lr : links) {
    if (!site_to_domain.count(lr.mention.site_id))
      throw DataError("coverage: site '" + lr.mention.site_id +
                      "' is missing from the site inventory");
    SiteAgg& agg = per_site[lr.mention.site_id];
    if (counting == CoverageCounting::PerMention) {
      ++agg.total;
      agg.linked += lr.linked ? 1 : 0;
    } else {
      // a type counts as linked when any of its mentions linked
      bool& linked = agg.types[normalize_mention(lr.mention.surface)];
      linked = linked || lr.linked;
    }
  }

  CoverageReport report;
  report.counting = counting;
  std::map<std::string, std::vector<SiteCoverage>> grouped;
  std::set<std::string> inventory_domains;
  for (const auto& [site, domain] : site_to_domain) {
    inventory_domains.insert(domain);
    auto it = per_site.find(site);
    if (it == per_site.end()) {
      report.warnings.push_back("site '" + site +
                                "' has no mentions; excluded from domain '" +
                                domain + "'");
      continue;
    }
    SiteCoverage sc;
    sc.site_id = site;
    if (counting == CoverageCounting::PerMention) {
      sc.total = it->second.total;
      sc.linked = it->second.linked;
    } else {
      sc.total = it->second.types.size();
      for (const auto& [surface, linked] : it->second.types)
        sc.linked += linked ? 1 : 0;
    }
    sc.percent = 100.0 * static_cast<double>(sc.linked) /
                 static_cast<double>(sc.total);
    grouped[domain].push_back(std::move(sc));
  }

  for (const std::string& domain : inventory_domains)
    if (!grouped.count(domain))
      throw DataError("coverage: domain '" + domain +
                      "' has no sites with mentions");

  for (auto& [name, sites] : grouped) {
    DomainCoverage dc;
    dc.domain = name;
    dc.sites = std::move(sites);  // map order: already sorted by site_id
    double sum = 0.0;
    for (const SiteCoverage& s : dc.sites) sum += s.percent;
    size_t n = dc.sites.size();
    dc.mean_percent = sum / static_cast<double>(n);
    if (n == 1) {
      dc.standard_error = 0.0;
      dc.single_site = true;
    } else {
      double ss = 0.0;
      for (const SiteCoverage& s : dc.sites) {
        double d = s.percent - dc.mean_percent;
        ss += d * d;
      }
      double sample_var = ss / static_cast<double>(n - 1);
      dc.standard_error = std::sqrt(sample_var / static_cast<double>(n));
    }
    report.domains.push_back(std::move(dc));
  }
  return report;
}

nlohmann::json to_json(const CoverageReport& report) {
  nlohmann::json domains = nlohmann::json::array();
  for (const DomainCoverage& dc : report.domains) {
    nlohmann::json sites = nlohmann::json::array();
    for (const SiteCoverage& s : dc.sites)
      sites.push_back({{"site_id", s.site_id},
                       {"total", s.total},
                       {"linked", s.linked},
                       {"percent", s.percent}});
    domains.push_back({{"domain", dc.domain},
                       {"n", dc.sites.size()},
                       {"sites", std::move(sites)},
                       {"mean_percent", dc.mean_percent},
                       {"standard_error", dc.standard_error},
                       {"single_site", dc.single_site}});
  }
  return {{"counting", std::string(to_string(report.counting))},
          {"domains", std::move(domains)},
          {"warnings", report.warnings}};
}

std::string coverage_markdown(const CoverageReport& report) {
  std::string out = "| domain | % wikifiable |\n| --- | --- |\n";
  for (const DomainCoverage& dc : report.domains) {
    out += "| " + dc.domain + " | " + format_percent(dc.mean_percent, 1) +
           " ± " + format_percent(dc.standard_error, 2);
    if (dc.single_site) out += " (single site)";
    out += " |\n";
  }
  return out;
}

}  // namespace corpex
