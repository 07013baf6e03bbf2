#pragma once

#include <string>
#include <vector>

namespace kgqa {

struct NumberedQuestion {
    int index = 0; // 1-based within the batch
    std::string text;
};

struct ChatMessage {
    std::string role; // system | user
    std::string content;
};

// One-shot batch prompt: system instruction, output-format instruction, the
// fixed example, then context and numbered questions. Rendering is
// byte-deterministic.
struct PromptSpec {
    std::string system_text;
    std::string one_shot_example;
    std::string context_text;
    std::vector<NumberedQuestion> questions;

    std::string render() const;
    std::vector<ChatMessage> to_messages() const;
};

inline constexpr int kMaxBatchQuestions = 50;

// Throws ValidationError unless 1 <= |questions| <= 50.
PromptSpec build_batch_prompt(const std::string& chunk_text,
                              const std::vector<std::string>& questions);

// Merging prompt consolidating per-chunk partial answer JSONs into one final
// answer per question.
PromptSpec build_merge_prompt(const std::vector<std::string>& chunk_partial_jsons,
                              const std::vector<std::string>& questions);

// Splits a question list into batches of at most kMaxBatchQuestions.
std::vector<std::vector<std::string>> split_batches(const std::vector<std::string>& questions,
                                                    int batch_cap = kMaxBatchQuestions);

} // namespace kgqa
