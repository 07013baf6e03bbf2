#pragma once

#include "kgqa/prompts.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

struct ModelConfig {
    std::string endpoint;   // full chat-completion URL
    std::string model_name;
    std::string payload_style = "openai"; // openai | gemini
    double temperature = 0.0;             // reproducibility contract
    int max_retries = 3;
    int timeout_seconds = 120;
    int backoff_base_ms = 500;
    std::string api_key_env; // environment variable holding the key
    int concurrency_limit = 4;
};

// Narrow completion interface so HTTP and test doubles are interchangeable.
class ModelClient {
public:
    virtual ~ModelClient() = default;
    // Raw completion text. Implementations throw TransportError or
    // CredentialError; retrying is the caller's job (see call_model).
    virtual std::string complete(const PromptSpec& prompt, const ModelConfig& cfg) = 0;
};

// Sends prompt to the configured endpoint. Retries transient transport
// failures up to cfg.max_retries with exponential backoff; credential
// failures are not retried. Requests are logged with a content hash.
std::string call_model(ModelClient& client, const PromptSpec& prompt, const ModelConfig& cfg);

// FNV-1a hex digest used for journaling and request logs.
std::string content_hash(std::string_view data);

// HTTP client speaking OpenAI-style or Gemini-style chat payloads.
class HttpModelClient : public ModelClient {
public:
    std::string complete(const PromptSpec& prompt, const ModelConfig& cfg) override;
};

// --- test doubles / mock profiles ---

// Answers every question with its gold answer (joined with ", "). The same
// question text can carry different answers in different documents, so the
// prompt's context is matched back to its source document first; the pooled
// map breaks ties when no single document matches (merge prompts).
class GoldOracleClient : public ModelClient {
public:
    struct DocGold {
        std::string doc_id;
        std::string doc_text; // original document text
        std::map<std::string, std::string> gold_by_question;
    };

    explicit GoldOracleClient(std::vector<DocGold> docs);
    std::string complete(const PromptSpec& prompt, const ModelConfig& cfg) override;
    int calls() const { return calls_.load(); }

private:
    std::vector<DocGold> docs_;
    std::map<std::string, std::string> pooled_;
    std::atomic<int> calls_{0};
};

// Returns "Not found" for every question.
class NotFoundClient : public ModelClient {
public:
    std::string complete(const PromptSpec& prompt, const ModelConfig& cfg) override;
    int calls() const { return calls_.load(); }

private:
    std::atomic<int> calls_{0};
};

// Wraps another client and fails the first `failures_per_prompt` attempts of
// each distinct prompt with a transport error. Counts every attempt.
class ScriptedFailureClient : public ModelClient {
public:
    ScriptedFailureClient(std::shared_ptr<ModelClient> inner, int failures_per_prompt)
        : inner_(std::move(inner)), failures_per_prompt_(failures_per_prompt) {}
    std::string complete(const PromptSpec& prompt, const ModelConfig& cfg) override;
    int calls() const { return calls_.load(); }

private:
    std::shared_ptr<ModelClient> inner_;
    int failures_per_prompt_;
    std::mutex mu_;
    std::map<std::string, int> attempts_;
    std::atomic<int> calls_{0};
};

// Builds the canned JSON answers payload used by the mock clients.
std::string answers_json(const std::vector<std::pair<int, std::string>>& indexed_answers);

} // namespace kgqa
