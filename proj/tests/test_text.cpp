#include "kgqa/text.hpp"

#include <doctest.h>

#include <random>

using namespace kgqa;

TEST_CASE("collapse_whitespace") {
    CHECK(collapse_whitespace("") == "");
    CHECK(collapse_whitespace("  a  b\n\tc ") == "a b c");
    CHECK(collapse_whitespace("already clean") == "already clean");
}

TEST_CASE("estimate_tokens formula") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens(std::string(400, 'x')) == 100);
    CHECK(estimate_tokens("abc") == 1);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("estimate_tokens is monotone over prefixes") {
    std::mt19937 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        std::string s;
        int n = static_cast<int>(rng() % 300);
        for (int i = 0; i < n; ++i)
            s.push_back(static_cast<char>('a' + rng() % 26));
        for (std::size_t cut = 0; cut <= s.size(); cut += 7)
            CHECK(estimate_tokens(s.substr(0, cut)) <= estimate_tokens(s));
    }
}

TEST_CASE("split_sentences reconstructs the document") {
    std::mt19937 rng(11);
    for (int iter = 0; iter < 100; ++iter) {
        std::string s;
        int n = static_cast<int>(rng() % 200);
        const char pool[] = "abc .!?\n\tX.";
        for (int i = 0; i < n; ++i)
            s.push_back(pool[rng() % (sizeof(pool) - 1)]);
        auto ranges = split_sentences(s);
        std::string rebuilt;
        std::size_t prev_end = 0;
        for (const auto& r : ranges) {
            CHECK(r.begin == prev_end);
            rebuilt += s.substr(r.begin, r.end - r.begin);
            prev_end = r.end;
        }
        CHECK(rebuilt == s);
    }
}

TEST_CASE("split_sentences boundaries") {
    auto r = split_sentences("One. Two! Three? Four");
    REQUIRE(r.size() == 4);
    CHECK(r[0].end == 5); // "One. " including the space
    auto none = split_sentences("no terminator here");
    REQUIRE(none.size() == 1);
    CHECK(split_sentences("").empty());
    // punctuation not followed by whitespace does not split
    CHECK(split_sentences("3.14 is pi").size() == 1);
}
