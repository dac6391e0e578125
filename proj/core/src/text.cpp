#include "critex/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace critex::text {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

std::string normalize_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;  // leading whitespace dropped
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            out.push_back(static_cast<char>(c));
            in_ws = false;
        }
    }
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (auto& span : word_tokens_with_offsets(s)) out.push_back(std::move(span.token));
    return out;
}

std::vector<TokenSpan> word_tokens_with_offsets(std::string_view s) {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_char(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
        out.push_back(TokenSpan{to_lower(s.substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

namespace {

struct Match {
    std::size_t a = 0, b = 0, size = 0;
};

// Longest matching block per the classic difflib algorithm: among maximal
// blocks, the one starting earliest in `a`, then earliest in `b`.
Match longest_match(std::string_view a, std::string_view /*b*/,
                    std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi,
                    const std::unordered_map<char, std::vector<std::size_t>>& b2j) {
    Match best{alo, blo, 0};
    std::unordered_map<std::size_t, std::size_t> j2len;
    for (std::size_t i = alo; i < ahi; ++i) {
        std::unordered_map<std::size_t, std::size_t> newj2len;
        auto it = b2j.find(a[i]);
        if (it != b2j.end()) {
            for (std::size_t j : it->second) {
                if (j < blo) continue;
                if (j >= bhi) break;
                std::size_t k = 1;
                if (j > 0) {
                    auto prev = j2len.find(j - 1);
                    if (prev != j2len.end()) k = prev->second + 1;
                }
                newj2len[j] = k;
                if (k > best.size) best = Match{i - k + 1, j - k + 1, k};
            }
        }
        j2len = std::move(newj2len);
    }
    return best;
}

void matching_blocks(std::string_view a, std::string_view b,
                     std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi,
                     const std::unordered_map<char, std::vector<std::size_t>>& b2j,
                     std::size_t& total) {
    Match m = longest_match(a, b, alo, ahi, blo, bhi, b2j);
    if (m.size == 0) return;
    total += m.size;
    matching_blocks(a, b, alo, m.a, blo, m.b, b2j, total);
    matching_blocks(a, b, m.a + m.size, ahi, m.b + m.size, bhi, b2j, total);
}

}  // namespace

double gestalt_ratio(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    std::unordered_map<char, std::vector<std::size_t>> b2j;
    for (std::size_t j = 0; j < b.size(); ++j) b2j[b[j]].push_back(j);
    std::size_t total = 0;
    matching_blocks(a, b, 0, a.size(), 0, b.size(), b2j, total);
    return 2.0 * static_cast<double>(total) / static_cast<double>(a.size() + b.size());
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace critex::text
