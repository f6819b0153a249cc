#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace corpex {

struct Utf8Result {
  std::string text;
  size_t replaced = 0;  // invalid byte sequences substituted with U+FFFD
};

// Validates UTF-8, replacing each malformed sequence with U+FFFD.  Overlong
// encodings, surrogates and values above U+10FFFF count as malformed.
Utf8Result sanitize_utf8(std::string_view raw);

// True for ASCII space, \t, \n, \r, \f, \v.
bool is_space(char c);

// Any run of whitespace becomes one space; leading/trailing runs vanish.
std::string collapse_whitespace(std::string_view s);

// Split on whitespace runs; empty fields never appear.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string ascii_lower(std::string_view s);

bool is_ascii_digit(char c);
bool is_ascii_alpha(char c);
bool is_ascii_upper(char c);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace corpex
