#include "kgqa/chunking.hpp"

#include "kgqa/errors.hpp"

namespace kgqa {

std::string ChunkPlan::reconstruct() const {
    std::string out;
    for (const auto& c : chunks)
        out += c.text;
    return out;
}

ChunkPlan plan_chunks(const std::string& doc_id, const std::string& doc_text, int budget) {
    if (budget <= 0)
        throw ValidationError("plan_chunks: budget must be positive");
    ChunkPlan plan;
    plan.doc_id = doc_id;
    plan.budget = budget;
    if (doc_text.empty())
        return plan;

    auto sentences = split_sentences(doc_text);
    std::string current;
    auto flush = [&]() {
        if (current.empty())
            return;
        Chunk c;
        c.estimated_tokens = estimate_tokens(current);
        c.text = std::move(current);
        current.clear();
        plan.chunks.push_back(std::move(c));
    };
    for (const auto& range : sentences) {
        std::string sentence(doc_text.substr(range.begin, range.end - range.begin));
        int sentence_tokens = estimate_tokens(sentence);
        if (sentence_tokens > budget) {
            flush();
            Chunk c;
            c.text = std::move(sentence);
            c.estimated_tokens = sentence_tokens;
            c.oversized = true;
            plan.chunks.push_back(std::move(c));
            continue;
        }
        if (!current.empty() && estimate_tokens(current) + sentence_tokens > budget)
            flush();
        current += sentence;
    }
    flush();
    return plan;
}

} // namespace kgqa
