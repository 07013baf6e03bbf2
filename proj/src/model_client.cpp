#include "kgqa/model_client.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

namespace kgqa {

using nlohmann::json;

std::string content_hash(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string call_model(ModelClient& client, const PromptSpec& prompt, const ModelConfig& cfg) {
    const std::string hash = content_hash(prompt.render());
    int attempts = cfg.max_retries + 1;
    for (int attempt = 1;; ++attempt) {
        try {
            std::string out = client.complete(prompt, cfg);
            std::cerr << "[model] request " << hash << " attempt " << attempt << " ok ("
                      << out.size() << " bytes)\n";
            return out;
        } catch (const CredentialError&) {
            throw; // never retried
        } catch (const TransportError& e) {
            std::cerr << "[model] request " << hash << " attempt " << attempt
                      << " failed: " << e.what() << "\n";
            if (attempt >= attempts)
                throw TransportError("request " + hash + " failed after " +
                                     std::to_string(attempt) + " attempts: " + e.what());
            int delay = cfg.backoff_base_ms * (1 << (attempt - 1));
            if (delay > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    // scheme://host[:port] + path
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint URL must start with http:// or https://: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

std::string HttpModelClient::complete(const PromptSpec& prompt, const ModelConfig& cfg) {
    if (cfg.temperature != 0.0)
        throw ConfigError("temperature must be 0.0");
    std::string api_key;
    if (!cfg.api_key_env.empty()) {
        const char* v = std::getenv(cfg.api_key_env.c_str());
        if (!v || !*v)
            throw CredentialError("environment variable " + cfg.api_key_env + " is not set");
        api_key = v;
    }

    auto [base, path] = split_url(cfg.endpoint);
    httplib::Client http(base);
    http.set_connection_timeout(cfg.timeout_seconds);
    http.set_read_timeout(cfg.timeout_seconds);

    json payload;
    httplib::Headers headers;
    if (cfg.payload_style == "gemini") {
        std::string joined;
        for (const auto& m : prompt.to_messages())
            joined += m.content + "\n";
        payload = {
            {"contents", json::array({{{"role", "user"},
                                       {"parts", json::array({{{"text", joined}}})}}})},
            {"generationConfig", {{"temperature", cfg.temperature}}},
        };
        if (!api_key.empty())
            headers.emplace("x-goog-api-key", api_key);
    } else {
        json messages = json::array();
        for (const auto& m : prompt.to_messages())
            messages.push_back({{"role", m.role}, {"content", m.content}});
        payload = {
            {"model", cfg.model_name},
            {"messages", messages},
            {"temperature", cfg.temperature},
        };
        if (!api_key.empty())
            headers.emplace("Authorization", "Bearer " + api_key);
    }

    auto res = http.Post(path, headers, payload.dump(), "application/json");
    if (!res)
        throw TransportError("no response from " + cfg.endpoint + ": " +
                             httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
        throw CredentialError("HTTP " + std::to_string(res->status) + " from " + cfg.endpoint);
    if (res->status < 200 || res->status >= 300)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + cfg.endpoint +
                             ": " + res->body.substr(0, 200));

    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what());
    }
    try {
        if (cfg.payload_style == "gemini") {
            std::string text;
            for (const auto& part : body.at("candidates").at(0).at("content").at("parts"))
                text += part.at("text").get<std::string>();
            return text;
        }
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected completion shape: ") + e.what());
    }
}

std::string answers_json(const std::vector<std::pair<int, std::string>>& indexed_answers) {
    json answers = json::array();
    for (const auto& [idx, text] : indexed_answers)
        answers.push_back({{"question_index", idx}, {"answer", text}});
    return json{{"answers", answers}}.dump();
}

GoldOracleClient::GoldOracleClient(std::vector<DocGold> docs) : docs_(std::move(docs)) {
    for (auto& d : docs_) {
        d.doc_text = collapse_whitespace(d.doc_text);
        for (const auto& [q, a] : d.gold_by_question)
            pooled_.emplace(q, a); // first (lowest doc id) wins on collisions
    }
}

std::string GoldOracleClient::complete(const PromptSpec& prompt, const ModelConfig&) {
    calls_.fetch_add(1);
    // Chunk context and oracle context are both substrings of exactly one
    // document after whitespace collapsing.
    const std::map<std::string, std::string>* gold = nullptr;
    std::string context = collapse_whitespace(prompt.context_text);
    if (!context.empty()) {
        const DocGold* only = nullptr;
        for (const auto& d : docs_) {
            if (d.doc_text.find(context) != std::string::npos) {
                if (only) {
                    only = nullptr;
                    break;
                }
                only = &d;
            }
        }
        if (only)
            gold = &only->gold_by_question;
    }
    if (!gold)
        gold = &pooled_;

    std::vector<std::pair<int, std::string>> out;
    for (const auto& q : prompt.questions) {
        std::string answer = "Not found";
        if (auto it = gold->find(q.text); it != gold->end())
            answer = it->second;
        else if (auto pit = pooled_.find(q.text); pit != pooled_.end())
            answer = pit->second;
        out.emplace_back(q.index, answer);
    }
    return answers_json(out);
}

std::string NotFoundClient::complete(const PromptSpec& prompt, const ModelConfig&) {
    calls_.fetch_add(1);
    std::vector<std::pair<int, std::string>> out;
    for (const auto& q : prompt.questions)
        out.emplace_back(q.index, "Not found");
    return answers_json(out);
}

std::string ScriptedFailureClient::complete(const PromptSpec& prompt, const ModelConfig& cfg) {
    calls_.fetch_add(1);
    const std::string key = content_hash(prompt.render());
    int attempt;
    {
        std::lock_guard<std::mutex> lock(mu_);
        attempt = ++attempts_[key];
    }
    if (attempt <= failures_per_prompt_)
        throw TransportError("scripted failure " + std::to_string(attempt) + " for " + key);
    return inner_->complete(prompt, cfg);
}

} // namespace kgqa
