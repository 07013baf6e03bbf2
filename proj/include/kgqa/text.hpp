#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

// Collapses internal whitespace runs to single spaces and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Deterministic token estimate: ceil(character_count / 4). Empty -> 0.
// The budget gate for chunking, not a provider tokenizer.
int estimate_tokens(std::string_view text);

// Half-open [begin, end) character range of one sentence. Ranges cover the
// whole document with no gaps, so concatenation reconstructs it.
struct SentenceRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Splits on '.', '!' or '?' followed by whitespace; the whitespace run
// attaches to the sentence it terminates.
std::vector<SentenceRange> split_sentences(std::string_view text);

} // namespace kgqa
