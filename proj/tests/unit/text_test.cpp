#include <doctest.h>

#include "critex/text.hpp"

using namespace critex;

TEST_CASE("whitespace normalization collapses runs and trims") {
    CHECK(text::normalize_ws("  a\t\tb \n c  ") == "a b c");
    CHECK(text::normalize_ws("") == "");
    CHECK(text::normalize_ws(" \n\t ") == "");
    CHECK(text::normalize_ws("already clean") == "already clean");
}

TEST_CASE("word tokenization lowercases and splits on non-word bytes") {
    auto tokens = text::word_tokens("Lower than 100 g CO2e/kWh.");
    CHECK(tokens == std::vector<std::string>{"lower", "than", "100", "g", "co2e", "kwh"});
}

TEST_CASE("token offsets address the original bytes") {
    auto spans = text::word_tokens_with_offsets("ab  CD");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].token == "ab");
    CHECK(spans[0].begin == 0);
    CHECK(spans[0].end == 2);
    CHECK(spans[1].token == "cd");
    CHECK(spans[1].begin == 4);
    CHECK(spans[1].end == 6);
}

TEST_CASE("gestalt ratio matches hand-computed SequenceMatcher values") {
    CHECK(text::gestalt_ratio("", "") == doctest::Approx(1.0));
    CHECK(text::gestalt_ratio("abc", "abc") == doctest::Approx(1.0));
    CHECK(text::gestalt_ratio("abc", "xyz") == doctest::Approx(0.0));
    // Classic difflib example: ratio("abcd", "bcde") = 2*3/8.
    CHECK(text::gestalt_ratio("abcd", "bcde") == doctest::Approx(0.75));
    // One-character rename keeps most of the mass.
    CHECK(text::gestalt_ratio("criterion 1(a)", "criterion 1.a") ==
          doctest::Approx(2.0 * 12 / 27).epsilon(1e-9));
}

TEST_CASE("gestalt ratio is symmetric in match mass") {
    // The recursive block decomposition counts the same matched characters
    // regardless of argument order for these inputs.
    std::string a = "the quick brown fox";
    std::string b = "the quiet brown fax";
    CHECK(text::gestalt_ratio(a, b) == doctest::Approx(text::gestalt_ratio(b, a)));
}
