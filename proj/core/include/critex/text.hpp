#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace critex::text {

/// Collapses runs of whitespace to single spaces and trims both ends.
std::string normalize_ws(std::string_view s);

std::string to_lower(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

/// Splits into lowercase word tokens. A word is a maximal run of
/// alphanumeric characters; bytes >= 0x80 count as letters so UTF-8
/// sequences stay intact.
std::vector<std::string> word_tokens(std::string_view s);

struct TokenSpan {
    std::string token;   // lowercased
    std::size_t begin;   // byte offset into the original string
    std::size_t end;     // one past the last byte
};

/// Like word_tokens but keeps byte offsets into the input.
std::vector<TokenSpan> word_tokens_with_offsets(std::string_view s);

/// Ratcliff-Obershelp gestalt similarity in [0, 1]: twice the total
/// length of recursively matched blocks over the summed lengths.
/// Two empty strings compare as 1.0.
double gestalt_ratio(std::string_view a, std::string_view b);

/// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace critex::text
