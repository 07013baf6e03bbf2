#include "kgqa/prompts.hpp"

#include "kgqa/errors.hpp"

#include <algorithm>
#include <sstream>

namespace kgqa {

namespace {

const char* kBatchSystem =
    "You are a financial expert, and your task is to answer the questions given to you in "
    "batches about the provided credit agreement. If you believe the answer is not present in "
    "the agreement, say 'Not found'.";

const char* kMergeSystem =
    "You are a financial expert, and your task is to combine or merge the provided partial "
    "answers, coming from different chunks of a credit agreement, into a single final answer "
    "for each of the questions given to you. If you believe the answer is not present in the "
    "agreement, say 'Not found'.";

const char* kExampleDocument =
    "Tesla, Inc. is an American electric vehicle and clean energy company founded in 2003 by "
    "Martin Eberhard and Marc Tarpenning. Elon Musk became the largest investor and later "
    "CEO.";

std::string one_shot_block() {
    std::ostringstream os;
    os << "The given document:\n"
       << kExampleDocument << "\n"
       << "\n"
       << "The given questions:\n"
       << "Q1: Who founded Tesla?\n"
       << "Q2: What year was Tesla founded?\n"
       << "\n"
       << "The expected output:\n"
       << "{\n"
       << "  \"answers\": [\n"
       << "    {\"question_index\": 1, \"answer\": \"Martin Eberhard, Marc Tarpenning\"},\n"
       << "    {\"question_index\": 2, \"answer\": \"2003\"}\n"
       << "  ]\n"
       << "}";
    return os.str();
}

std::vector<NumberedQuestion> number_questions(const std::vector<std::string>& questions) {
    std::vector<NumberedQuestion> out;
    int i = 1;
    for (const auto& q : questions)
        out.push_back({i++, q});
    return out;
}

} // namespace

std::string PromptSpec::render() const {
    std::ostringstream os;
    os << "[SYSTEM INPUT]\n" << system_text << "\n\n";
    os << "[EXPECTED OUTPUT]\n"
       << "Respond ONLY with valid JSON, nothing else. See the example below.\n\n";
    os << one_shot_example << "\n\n";
    os << "[USER INPUT]\n" << context_text << "\n\n";
    os << "[QUESTIONS]\n";
    for (const auto& q : questions)
        os << "Q" << q.index << ": " << q.text << "\n";
    return os.str();
}

std::vector<ChatMessage> PromptSpec::to_messages() const {
    std::ostringstream sys;
    sys << system_text << "\n\n"
        << "Respond ONLY with valid JSON, nothing else. See the example below.\n\n"
        << one_shot_example;
    std::ostringstream user;
    user << context_text << "\n\n";
    for (const auto& q : questions)
        user << "Q" << q.index << ": " << q.text << "\n";
    return {{"system", sys.str()}, {"user", user.str()}};
}

PromptSpec build_batch_prompt(const std::string& chunk_text,
                              const std::vector<std::string>& questions) {
    if (questions.empty() || questions.size() > kMaxBatchQuestions)
        throw ValidationError("build_batch_prompt: batch must hold 1..50 questions, got " +
                              std::to_string(questions.size()));
    PromptSpec p;
    p.system_text = kBatchSystem;
    p.one_shot_example = one_shot_block();
    p.context_text = chunk_text;
    p.questions = number_questions(questions);
    return p;
}

PromptSpec build_merge_prompt(const std::vector<std::string>& chunk_partial_jsons,
                              const std::vector<std::string>& questions) {
    if (questions.empty() || questions.size() > kMaxBatchQuestions)
        throw ValidationError("build_merge_prompt: batch must hold 1..50 questions, got " +
                              std::to_string(questions.size()));
    PromptSpec p;
    p.system_text = kMergeSystem;
    p.one_shot_example = one_shot_block();
    std::ostringstream ctx;
    for (std::size_t i = 0; i < chunk_partial_jsons.size(); ++i)
        ctx << "Chunk " << (i + 1) << " partial answer JSON: " << chunk_partial_jsons[i] << "\n";
    p.context_text = ctx.str();
    p.questions = number_questions(questions);
    return p;
}

std::vector<std::vector<std::string>> split_batches(const std::vector<std::string>& questions,
                                                    int batch_cap) {
    if (batch_cap <= 0 || batch_cap > kMaxBatchQuestions)
        batch_cap = kMaxBatchQuestions;
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i < questions.size(); i += static_cast<std::size_t>(batch_cap)) {
        auto end = std::min(questions.size(), i + static_cast<std::size_t>(batch_cap));
        out.emplace_back(questions.begin() + static_cast<std::ptrdiff_t>(i),
                         questions.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

} // namespace kgqa
