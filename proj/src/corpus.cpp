#include "corpex/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "corpex/errors.hpp"
#include "corpex/text.hpp"

namespace corpex {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Legality v) {
  switch (v) {
    case Legality::Legal: return "legal";
    case Legality::Illegal: return "illegal";
    case Legality::Unspecified: return "unspecified";
  }
  return "unspecified";
}

Legality legality_from_string(std::string_view s) {
  if (s == "legal") return Legality::Legal;
  if (s == "illegal") return Legality::Illegal;
  if (s == "unspecified" || s.empty()) return Legality::Unspecified;
  throw ConfigError("unknown legality value: '" + std::string(s) + "'");
}

namespace {

void warn(Warnings* warnings, std::string message) {
  if (warnings) warnings->push_back(std::move(message));
}

Corpus load_jsonl(const fs::path& path, const DomainLabel& domain,
                  Warnings* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file: " + path.string());
  Corpus corpus{domain, {}};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = std::all_of(line.begin(), line.end(), is_space);
    if (blank) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where() + ": malformed JSON: " + e.what());
    }
    if (!record.is_object())
      throw DataError(where() + ": record is not a JSON object");
    for (const char* field : {"id", "site_id", "domain", "text"}) {
      if (!record.contains(field) || !record[field].is_string())
        throw DataError(where() + ": missing or non-string field '" +
                        field + "'");
    }
    std::string rec_domain = record["domain"].get<std::string>();
    if (rec_domain != domain.name)
      throw DataError(where() + ": unknown domain name '" + rec_domain +
                      "' (expected '" + domain.name + "')");
    Utf8Result text = sanitize_utf8(record["text"].get<std::string>());
    if (text.replaced > 0)
      warn(warnings, path.string() + ":" + std::to_string(line_no) + ": " +
                         std::to_string(text.replaced) +
                         " invalid UTF-8 sequence(s) replaced");
    corpus.paragraphs.push_back({record["id"].get<std::string>(),
                                 record["site_id"].get<std::string>(), domain,
                                 std::move(text.text)});
  }
  return corpus;
}

Corpus load_textdir(const fs::path& path, const DomainLabel& domain,
                    Warnings* warnings) {
  std::error_code ec;
  if (!fs::is_directory(path, ec))
    throw DataError("corpus path is not a directory: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());  // directory order is not portable
  Corpus corpus{domain, {}};
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read corpus file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Utf8Result content = sanitize_utf8(buf.str());
    if (content.replaced > 0)
      warn(warnings, file.string() + ": " + std::to_string(content.replaced) +
                         " invalid UTF-8 sequence(s) replaced");
    std::string site = file.stem().string();
    // Paragraph = maximal run of non-blank lines.
    std::istringstream lines(content.text);
    std::string line, block;
    size_t index = 0;
    auto flush = [&] {
      if (block.empty()) return;
      ++index;
      corpus.paragraphs.push_back(
          {site + "#" + std::to_string(index), site, domain, block});
      block.clear();
    };
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (std::all_of(line.begin(), line.end(), is_space)) {
        flush();
      } else {
        if (!block.empty()) block += '\n';
        block += line;
      }
    }
    flush();
  }
  return corpus;
}

bool looks_like_url(std::string_view token) {
  std::string low = ascii_lower(token);
  std::string_view lv = low;
  if (lv.starts_with("http://") || lv.starts_with("https://") ||
      lv.starts_with("ftp://"))
    return true;
  // Bare onion hosts ("x7yz...abcd.onion/path") appear constantly in the
  // data without a scheme; catch those too.
  size_t pos = lv.find(".onion");
  if (pos == std::string_view::npos || pos == 0) return false;
  for (size_t i = 0; i < pos; ++i) {
    char c = lv[i];
    bool host_char = (c >= 'a' && c <= 'z') || is_ascii_digit(c) || c == '.' ||
                     c == '-';
    if (!host_char) return false;
  }
  size_t rest = pos + 6;
  if (rest == lv.size()) return true;
  if (lv[rest] == '/' || lv[rest] == ':') return true;
  // Allow trailing punctuation: "...onion," / "...onion)."
  for (size_t i = rest; i < lv.size(); ++i) {
    if (is_ascii_alpha(lv[i]) || is_ascii_digit(lv[i])) return false;
  }
  return true;
}

bool looks_like_key_blob(std::string_view token, size_t min_length) {
  if (token.size() < min_length) return false;
  for (char c : token) {
    bool b64 = is_ascii_alpha(c) || is_ascii_digit(c) || c == '+' ||
               c == '/' || c == '=';
    if (!b64) return false;
  }
  return true;
}

}  // namespace

Corpus load_corpus(const fs::path& path, CorpusFormat format,
                   const DomainLabel& domain, Warnings* warnings) {
  Corpus corpus = format == CorpusFormat::JsonLines
                      ? load_jsonl(path, domain, warnings)
                      : load_textdir(path, domain, warnings);
  if (corpus.paragraphs.empty())
    warn(warnings, "corpus '" + domain.name + "' is empty: " + path.string());
  return corpus;
}

std::string clean_paragraph(std::string_view raw, const CleanOptions& opts) {
  std::vector<std::string_view> tokens = split_whitespace(raw);
  std::string out;
  out.reserve(raw.size());
  for (std::string_view tok : tokens) {
    if (opts.strip_urls && looks_like_url(tok)) continue;
    if (opts.strip_key_blobs && looks_like_key_blob(tok, opts.key_min_length))
      continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

Corpus clean_corpus(const Corpus& corpus, const CleanOptions& opts,
                    CleanStats* stats) {
  Corpus out{corpus.domain, {}};
  size_t emptied = 0;
  for (const Paragraph& p : corpus.paragraphs) {
    std::string text = clean_paragraph(p.text, opts);
    if (text.empty()) {
      ++emptied;
      continue;
    }
    out.paragraphs.push_back({p.id, p.site_id, p.domain, std::move(text)});
  }
  if (stats) {
    stats->paragraphs_in = corpus.paragraphs.size();
    stats->emptied = emptied;
    stats->paragraphs_out = out.paragraphs.size();
  }
  return out;
}

std::string dedup_key(std::string_view text) {
  // The placeholder is a control byte that sanitised text never needs, so a
  // masked digit run cannot collide with literal characters.
  constexpr char kDigitRun = '\x01';
  std::string masked;
  masked.reserve(text.size());
  bool in_digits = false;
  for (char c : text) {
    if (is_ascii_digit(c)) {
      if (!in_digits) masked += kDigitRun;
      in_digits = true;
    } else {
      in_digits = false;
      masked += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
  }
  return collapse_whitespace(masked);
}

Corpus dedup_paragraphs(const Corpus& corpus, size_t* removed) {
  Corpus out{corpus.domain, {}};
  std::unordered_set<std::string> seen;
  seen.reserve(corpus.paragraphs.size() * 2);
  for (const Paragraph& p : corpus.paragraphs) {
    if (seen.insert(dedup_key(p.text)).second) out.paragraphs.push_back(p);
  }
  if (removed) *removed = corpus.paragraphs.size() - out.paragraphs.size();
  return out;
}

Corpus load_clean_corpus(const fs::path& path, CorpusFormat format,
                         const DomainLabel& domain, const CleanOptions& opts,
                         CleanStats* stats, Warnings* warnings) {
  Corpus raw = load_corpus(path, format, domain, warnings);
  Corpus cleaned = clean_corpus(raw, opts, stats);
  size_t removed = 0;
  Corpus deduped = dedup_paragraphs(cleaned, &removed);
  if (stats) {
    stats->duplicates = removed;
    stats->paragraphs_out = deduped.paragraphs.size();
  }
  return deduped;
}

void write_jsonl(const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  for (const Paragraph& p : corpus.paragraphs) {
    json record{{"id", p.id},
                {"site_id", p.site_id},
                {"domain", p.domain.name},
                {"text", p.text}};
    out << record.dump() << '\n';
  }
}

}  // namespace corpex
