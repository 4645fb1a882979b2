#include "doctest.h"

#include <random>
#include <string>

#include "similarity.hpp"
#include "support/gestalt_oracle.hpp"

using stepguard::sim::canonical_ratio;
using stepguard::sim::canonicalize;
using stepguard::sim::fold_for_comparison;
using stepguard::sim::gestalt_ratio;

TEST_CASE("gestalt_ratio frozen values") {
    // Expected values computed beforehand with the brute-force recursion.
    CHECK(gestalt_ratio("abc", "abc") == 1.0);
    CHECK(gestalt_ratio("apple", "") == 0.0);
    CHECK(gestalt_ratio("", "apple") == 0.0);
    CHECK(gestalt_ratio("", "") == 1.0);
    CHECK(gestalt_ratio("abcd", "bcda") == 2.0 * 3 / 8);
    CHECK(gestalt_ratio("apple", "applesauce") == 2.0 * 5 / 15);
    CHECK(gestalt_ratio("guardrail", "guardian") == 2.0 * 6 / 17);
    CHECK(gestalt_ratio("hello world", "world hello") == 2.0 * 5 / 22);
    CHECK(gestalt_ratio("abcabba", "cbabac") == 2.0 * 3 / 13);
    CHECK(gestalt_ratio("qqaabbcc", "aabbccqq") == 2.0 * 6 / 16);
    CHECK(gestalt_ratio("never auto-confirm payments", "never autoconfirm payments") == 2.0 * 26 / 53);
    CHECK(gestalt_ratio("Do not click external links", "do not click external links") == 2.0 * 26 / 54);
}

TEST_CASE("gestalt_ratio no shared characters is zero") {
    CHECK(gestalt_ratio("aaa", "bbb") == 0.0);
    CHECK(gestalt_ratio("xyz", "qrs") == 0.0);
}

TEST_CASE("gestalt_ratio identity and bounds on random strings") {
    std::mt19937 rng(20250811);
    std::uniform_int_distribution<int> len_dist(1, 64);
    std::uniform_int_distribution<int> char_dist(0, 15);
    for (int trial = 0; trial < 500; ++trial) {
        std::string a;
        const int n = len_dist(rng);
        for (int i = 0; i < n; ++i) a.push_back(static_cast<char>('a' + char_dist(rng)));
        CHECK(gestalt_ratio(a, a) == 1.0);
        std::string b;
        const int m = len_dist(rng);
        for (int i = 0; i < m; ++i) b.push_back(static_cast<char>('a' + char_dist(rng)));
        const double r = gestalt_ratio(a, b);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("gestalt_ratio matches brute-force oracle on random pairs") {
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> len_dist(0, 64);
    std::uniform_int_distribution<int> alpha_dist(2, 16);
    for (int trial = 0; trial < 2000; ++trial) {
        const int alphabet = alpha_dist(rng);
        std::uniform_int_distribution<int> char_dist(0, alphabet - 1);
        std::string a, b;
        const int n = len_dist(rng);
        const int m = len_dist(rng);
        for (int i = 0; i < n; ++i) a.push_back(static_cast<char>('a' + char_dist(rng)));
        for (int i = 0; i < m; ++i) b.push_back(static_cast<char>('a' + char_dist(rng)));
        const double expected = oracle::ratio(a, b);
        const double actual = gestalt_ratio(a, b);
        REQUIRE_MESSAGE(actual == expected, "a=\"" << a << "\" b=\"" << b << "\"");
    }
}

TEST_CASE("gestalt_ratio works on code points, not bytes") {
    // Same two-codepoint strings; byte-level comparison would differ.
    CHECK(gestalt_ratio("\xC3\xA9\xC3\xA8", "\xC3\xA9\xC3\xA8") == 1.0); // "éè"
    // One shared codepoint of two.
    CHECK(gestalt_ratio("\xC3\xA9x", "\xC3\xA9y") == 0.5);
}

TEST_CASE("canonicalize collapses whitespace and strips control characters") {
    CHECK(canonicalize("  hello   world \n") == "hello world");
    CHECK(canonicalize("tab\tseparated\r\nlines") == "tab separated lines");
    CHECK(canonicalize(std::string("a\x01") + "b") == "ab");
    CHECK(canonicalize("") == "");
}

TEST_CASE("fold_for_comparison lowercases and NFC-composes") {
    CHECK(fold_for_comparison("Never Auto-Confirm") == "never auto-confirm");
    // "é" precomposed (U+00E9) vs decomposed (e + U+0301) normalize identically.
    CHECK(fold_for_comparison("caf\xC3\xA9") == fold_for_comparison("cafe\xCC\x81"));
}

TEST_CASE("canonical_ratio ignores trivial casing differences") {
    CHECK(canonical_ratio("Do Not Click External Links", "do not click external links") == 1.0);
    CHECK(canonical_ratio("ABC", "xyz") == 0.0);
}
