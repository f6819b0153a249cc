#include "corpex/text.hpp"

namespace corpex {

namespace {
constexpr const char* kReplacement = "\xEF\xBF\xBD";  // U+FFFD
}

Utf8Result sanitize_utf8(std::string_view raw) {
  Utf8Result out;
  out.text.reserve(raw.size());
  const auto* s = reinterpret_cast<const unsigned char*>(raw.data());
  size_t n = raw.size();
  size_t i = 0;
  auto bad_byte = [&] {
    out.text += kReplacement;
    ++out.replaced;
    ++i;
  };
  while (i < n) {
    unsigned char b = s[i];
    if (b < 0x80) {
      out.text += static_cast<char>(b);
      ++i;
      continue;
    }
    size_t len;
    uint32_t cp, min_cp;
    if ((b & 0xE0) == 0xC0) {
      len = 2, cp = b & 0x1Fu, min_cp = 0x80;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3, cp = b & 0x0Fu, min_cp = 0x800;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4, cp = b & 0x07u, min_cp = 0x10000;
    } else {
      bad_byte();
      continue;
    }
    if (i + len > n) {
      bad_byte();
      continue;
    }
    bool ok = true;
    for (size_t k = 1; k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (s[i + k] & 0x3Fu);
    }
    // Reject overlong forms, surrogate halves and out-of-range values.
    if (!ok || cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      bad_byte();  // replace the lead byte only, then resynchronise
      continue;
    }
    out.text.append(raw.substr(i, len));
    i += len;
  }
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_gap = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_gap = !out.empty();
    } else {
      if (pending_gap) out += ' ';
      pending_gap = false;
      out += c;
    }
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> fields;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) fields.push_back(s.substr(start, i - start));
  }
  return fields;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace corpex
