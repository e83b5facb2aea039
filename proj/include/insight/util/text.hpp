#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace insight::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Collapses every run of whitespace into one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Removes a surrounding markdown code fence (```lang ... ```) if present.
std::string strip_code_fences(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercased alphanumeric word tokens; "_" separates words.
std::vector<std::string> word_tokens(std::string_view s);

// YYYY-MM, YYYY-MM-DD, optionally followed by [ T]HH:MM[:SS[.fff]].
bool looks_like_date(std::string_view s);

std::size_t edit_distance(std::string_view a, std::string_view b);

std::string sha256_hex(std::string_view data);

}  // namespace insight::util
