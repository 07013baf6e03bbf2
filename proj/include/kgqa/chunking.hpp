#pragma once

#include "kgqa/text.hpp"

#include <string>
#include <vector>

namespace kgqa {

struct Chunk {
    std::string text;
    int estimated_tokens = 0;
    bool oversized = false; // single sentence exceeding the budget
};

struct ChunkPlan {
    std::string doc_id;
    std::vector<Chunk> chunks;
    int budget = 0;

    // Chunks carry their boundary whitespace, so plain concatenation
    // reconstructs the document.
    std::string reconstruct() const;
};

// Greedy fill at sentence boundaries. A sentence that alone exceeds the
// budget becomes its own chunk flagged oversized. Empty document -> empty
// plan. Throws ValidationError when budget <= 0.
ChunkPlan plan_chunks(const std::string& doc_id, const std::string& doc_text, int budget);

} // namespace kgqa
