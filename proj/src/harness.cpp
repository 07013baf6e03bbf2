#include "kgqa/harness.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace kgqa {

using nlohmann::json;

namespace {

std::optional<std::map<int, std::string>> try_parse_answers_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("answers") || !j["answers"].is_array())
        return std::nullopt;
    std::map<int, std::string> out;
    for (const auto& a : j["answers"]) {
        if (!a.is_object() || !a.contains("question_index") || !a.contains("answer"))
            continue;
        int idx;
        if (a["question_index"].is_number_integer())
            idx = a["question_index"].get<int>();
        else if (a["question_index"].is_string())
            idx = std::atoi(a["question_index"].get<std::string>().c_str());
        else
            continue;
        std::string answer;
        if (a["answer"].is_string())
            answer = a["answer"].get<std::string>();
        else
            answer = a["answer"].dump();
        out[idx] = answer;
    }
    if (out.empty())
        return std::nullopt;
    return out;
}

std::optional<std::string> first_code_fence(const std::string& raw) {
    auto open = raw.find("```");
    if (open == std::string::npos)
        return std::nullopt;
    auto body_start = raw.find('\n', open);
    if (body_start == std::string::npos)
        return std::nullopt;
    auto close = raw.find("```", body_start);
    if (close == std::string::npos)
        return std::nullopt;
    return raw.substr(body_start + 1, close - body_start - 1);
}

// Outermost brace-balanced candidate, quote-aware.
std::optional<std::string> balanced_json_candidate(const std::string& raw) {
    auto start = raw.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (c == '\\')
                    ++i;
                else if (c == '"')
                    in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0)
                    return raw.substr(start, i - start + 1);
            }
        }
        start = raw.find('{', start + 1);
    }
    return std::nullopt;
}

std::map<int, std::string> parse_list_fallback(const std::string& raw) {
    std::map<int, std::string> out;
    static const std::regex kSimple(R"(^\s*(?:[Qq])?(\d+)\s*[:.)]\s*(.+?)\s*$)");
    std::istringstream is(raw);
    std::string line;
    while (std::getline(is, line)) {
        std::smatch m;
        if (std::regex_match(line, m, kSimple)) {
            int idx = std::atoi(m[1].str().c_str());
            if (idx > 0 && !out.count(idx))
                out[idx] = m[2].str();
        }
    }
    return out;
}

} // namespace

std::map<int, std::string> parse_response(const std::string& raw,
                                          const std::vector<int>& expected_indices) {
    std::set<int> expected(expected_indices.begin(), expected_indices.end());
    auto restrict = [&](std::map<int, std::string> parsed) {
        std::map<int, std::string> out;
        for (auto& [idx, ans] : parsed)
            if (expected.empty() || expected.count(idx))
                out[idx] = std::move(ans);
        return out;
    };

    if (auto parsed = try_parse_answers_json(raw))
        return restrict(std::move(*parsed));
    if (auto fenced = first_code_fence(raw))
        if (auto parsed = try_parse_answers_json(*fenced))
            return restrict(std::move(*parsed));
    if (auto candidate = balanced_json_candidate(raw))
        if (auto parsed = try_parse_answers_json(*candidate))
            return restrict(std::move(*parsed));
    return restrict(parse_list_fallback(raw));
}

std::string merge_partials(const std::string& question, const std::vector<std::string>& partials,
                           ModelClient& client, const ModelConfig& cfg) {
    if (partials.empty())
        throw ValidationError("merge_partials: at least one partial required");
    if (partials.size() == 1)
        return partials.front();
    bool all_not_found = true;
    for (const auto& p : partials)
        if (!detect_not_found(p))
            all_not_found = false;
    if (all_not_found)
        return "Not found";

    std::vector<std::string> partial_jsons;
    for (const auto& p : partials)
        partial_jsons.push_back(answers_json({{1, p}}));
    auto prompt = build_merge_prompt(partial_jsons, {question});
    std::string raw = call_model(client, prompt, cfg);
    auto parsed = parse_response(raw, {1});
    auto it = parsed.find(1);
    if (it == parsed.end())
        return "Not found";
    return it->second;
}

namespace {

std::vector<LabelKind> kinds_for_token(const std::string& kind) {
    if (kind == "person")
        return {LabelKind::PersonName};
    if (kind == "org")
        return {LabelKind::OrgName};
    if (kind == "position")
        return {LabelKind::PersonPosition};
    if (kind == "role" || kind == "role_combo")
        return {LabelKind::OrgRole, LabelKind::OrgSubRole};
    if (kind == "location")
        return {LabelKind::Location};
    if (kind == "location_type")
        return {LabelKind::LocationType};
    return {};
}

} // namespace

std::string assemble_oracle_context(const QAPair& qa, const AnnotationSet& merged) {
    std::vector<std::pair<std::size_t, std::size_t>> span_ranges;
    auto add_spans_for = [&](const std::string& label, const std::vector<LabelKind>& kinds,
                             const std::string& what) {
        bool found = false;
        std::string wanted = collapse_whitespace(label);
        for (const auto& s : merged.spans) {
            if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end())
                continue;
            if (collapse_whitespace(s.text) == wanted) {
                span_ranges.emplace_back(s.char_start, s.char_end);
                found = true;
            }
        }
        if (!found)
            throw ProvenanceError("oracle context: cannot locate " + what + " '" + label +
                                  "' in document " + merged.doc_id);
    };

    for (const auto& b : qa.bindings) {
        auto kinds = kinds_for_token(b.kind);
        for (const auto& label : b.labels)
            add_spans_for(label, kinds, "binding " + b.slot);
    }
    auto answer_kinds = kinds_for_token(qa.answer_kind);
    for (const auto& answer : qa.answers)
        add_spans_for(answer, answer_kinds, "answer");

    auto sentences = split_sentences(merged.document_text);
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        for (const auto& [begin, end] : span_ranges) {
            if (begin < sentences[i].end && sentences[i].begin < end) {
                picked.push_back(i);
                break;
            }
        }
    }
    std::sort(picked.begin(), picked.end());
    picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

    std::string joined;
    for (std::size_t idx : picked) {
        const auto& r = sentences[idx];
        joined += merged.document_text.substr(r.begin, r.end - r.begin);
        joined += " ";
    }
    return collapse_whitespace(joined);
}

Journal::Journal(std::string path) : path_(std::move(path)) {
    if (path_.empty())
        return;
    std::ifstream in(path_, std::ios::binary);
    if (!in)
        return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("key") || !j.contains("raw"))
            continue;
        entries_[j["key"].get<std::string>()] = j["raw"].get<std::string>();
    }
}

std::optional<std::string> Journal::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

void Journal::put(const std::string& key, const std::string& raw) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key] = raw;
    if (path_.empty())
        return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << json{{"key", key}, {"raw", raw}}.dump() << "\n";
}

namespace {

void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0)
        return;
    int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                fn(i);
            }
        });
    }
    for (auto& t : pool)
        t.join();
}

struct WorkUnit {
    std::string key;
    PromptSpec prompt;
    // (qa index in `pairs`, question index within prompt)
    std::vector<std::pair<std::size_t, int>> members;
    std::string doc_id;
    std::size_t chunk_idx = 0;
};

// Journal-aware execution of one unit; failures leave raw empty.
std::string execute_unit(const WorkUnit& unit, Journal& journal, ModelClient& client,
                         const ModelConfig& cfg) {
    if (auto cached = journal.get(unit.key))
        return *cached;
    try {
        std::string raw = call_model(client, unit.prompt, cfg);
        journal.put(unit.key, raw);
        return raw;
    } catch (const std::exception&) {
        return "";
    }
}

} // namespace

std::vector<AnswerRecord> run_evaluation(const std::vector<AnnotationSet>& corpus,
                                         const std::vector<QAPair>& pairs, ModelClient& client,
                                         const ModelConfig& cfg, const EvalOptions& opts) {
    std::map<std::string, const AnnotationSet*> docs;
    for (const auto& a : corpus)
        docs[a.doc_id] = &a;
    for (const auto& qa : pairs)
        if (!docs.count(qa.doc_id))
            throw ReferenceError("run_evaluation: pair " + qa.qa_id + " references unknown doc " +
                                 qa.doc_id);

    if (!opts.run_dir.empty())
        std::filesystem::create_directories(opts.run_dir);
    Journal journal(opts.run_dir.empty() ? "" : opts.run_dir + "/journal.jsonl");

    // Stable order: pairs grouped per document, documents sorted.
    std::map<std::string, std::vector<std::size_t>> by_doc;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        by_doc[pairs[i].doc_id].push_back(i);
    for (auto& [doc, idxs] : by_doc)
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            return pairs[a].qa_id < pairs[b].qa_id;
        });

    std::vector<WorkUnit> units;
    std::map<std::string, std::size_t> doc_chunk_count;

    for (const auto& [doc_id, qa_indices] : by_doc) {
        const AnnotationSet& doc = *docs.at(doc_id);
        if (opts.mode == EvalMode::Oracle) {
            doc_chunk_count[doc_id] = 1;
            for (std::size_t qi : qa_indices) {
                WorkUnit u;
                u.doc_id = doc_id;
                u.chunk_idx = 0;
                std::string context = assemble_oracle_context(pairs[qi], doc);
                u.prompt = build_batch_prompt(context, {pairs[qi].question});
                u.members = {{qi, 1}};
                u.key = content_hash("oracle|" + pairs[qi].qa_id + "|" + u.prompt.render());
                units.push_back(std::move(u));
            }
        } else {
            auto plan = plan_chunks(doc_id, doc.document_text, opts.chunk_budget_tokens);
            if (plan.chunks.empty())
                plan.chunks.push_back({doc.document_text, 0, false});
            doc_chunk_count[doc_id] = plan.chunks.size();

            std::vector<std::vector<std::size_t>> batches;
            std::vector<std::size_t> batch;
            for (std::size_t qi : qa_indices) {
                batch.push_back(qi);
                if (static_cast<int>(batch.size()) >= opts.batch_cap) {
                    batches.push_back(batch);
                    batch.clear();
                }
            }
            if (!batch.empty())
                batches.push_back(batch);

            for (std::size_t ci = 0; ci < plan.chunks.size(); ++ci) {
                for (std::size_t bi = 0; bi < batches.size(); ++bi) {
                    WorkUnit u;
                    u.doc_id = doc_id;
                    u.chunk_idx = ci;
                    std::vector<std::string> questions;
                    int qnum = 1;
                    for (std::size_t qi : batches[bi]) {
                        questions.push_back(pairs[qi].question);
                        u.members.emplace_back(qi, qnum++);
                    }
                    u.prompt = build_batch_prompt(plan.chunks[ci].text, questions);
                    std::ostringstream key_src;
                    key_src << "chunk|" << doc_id << "|" << ci << "|" << bi << "|"
                            << u.prompt.render();
                    u.key = content_hash(key_src.str());
                    units.push_back(std::move(u));
                }
            }
        }
    }

    // Phase 1: chunk-level prompts.
    std::vector<std::string> raw_by_unit(units.size());
    parallel_for(units.size(), opts.parallelism, [&](std::size_t i) {
        raw_by_unit[i] = execute_unit(units[i], journal, client, cfg);
    });

    // Collect per-question, per-chunk partial answers.
    struct PairState {
        std::vector<std::string> chunk_answers; // sized by doc chunk count
        std::vector<bool> chunk_present;
    };
    std::vector<PairState> state(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto n = doc_chunk_count.at(pairs[i].doc_id);
        state[i].chunk_answers.assign(n, "");
        state[i].chunk_present.assign(n, false);
    }
    for (std::size_t ui = 0; ui < units.size(); ++ui) {
        const auto& unit = units[ui];
        if (raw_by_unit[ui].empty())
            continue;
        std::vector<int> expected;
        for (const auto& [qi, qnum] : unit.members)
            expected.push_back(qnum);
        auto parsed = parse_response(raw_by_unit[ui], expected);
        for (const auto& [qi, qnum] : unit.members) {
            auto it = parsed.find(qnum);
            if (it == parsed.end())
                continue;
            state[qi].chunk_answers[unit.chunk_idx] = it->second;
            state[qi].chunk_present[unit.chunk_idx] = true;
        }
    }

    // Phase 2: merge prompts for questions with several present partials.
    struct MergeUnit {
        std::size_t qa_index;
        std::string key;
        PromptSpec prompt;
    };
    std::vector<MergeUnit> merges;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& st = state[i];
        std::vector<std::string> present;
        for (std::size_t c = 0; c < st.chunk_answers.size(); ++c)
            if (st.chunk_present[c])
                present.push_back(st.chunk_answers[c]);
        if (present.size() < 2)
            continue;
        bool all_nf = true;
        for (const auto& p : present)
            if (!detect_not_found(p))
                all_nf = false;
        if (all_nf)
            continue; // short-circuit, no model call
        MergeUnit mu;
        mu.qa_index = i;
        std::vector<std::string> partial_jsons;
        for (const auto& p : present)
            partial_jsons.push_back(answers_json({{1, p}}));
        mu.prompt = build_merge_prompt(partial_jsons, {pairs[i].question});
        mu.key = content_hash("merge|" + pairs[i].qa_id + "|" + mu.prompt.render());
        merges.push_back(std::move(mu));
    }
    std::vector<std::string> merge_raw(merges.size());
    parallel_for(merges.size(), opts.parallelism, [&](std::size_t i) {
        WorkUnit u;
        u.key = merges[i].key;
        u.prompt = merges[i].prompt;
        merge_raw[i] = execute_unit(u, journal, client, cfg);
    });
    std::map<std::size_t, std::string> merged_final;
    for (std::size_t i = 0; i < merges.size(); ++i) {
        if (merge_raw[i].empty())
            continue;
        auto parsed = parse_response(merge_raw[i], {1});
        auto it = parsed.find(1);
        if (it != parsed.end())
            merged_final[merges[i].qa_index] = it->second;
    }

    // Assemble one record per pair, in input order.
    std::vector<AnswerRecord> records;
    records.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& st = state[i];
        AnswerRecord r;
        r.qa_id = pairs[i].qa_id;
        r.chunk_answers = st.chunk_answers;
        std::vector<std::string> present;
        for (std::size_t c = 0; c < st.chunk_answers.size(); ++c)
            if (st.chunk_present[c])
                present.push_back(st.chunk_answers[c]);
        if (present.empty()) {
            r.final_answer = "";
            r.status = "parse_failed";
        } else {
            if (present.size() == 1) {
                r.final_answer = present.front();
            } else if (auto it = merged_final.find(i); it != merged_final.end()) {
                r.final_answer = it->second;
            } else {
                bool all_nf = true;
                for (const auto& p : present)
                    if (!detect_not_found(p))
                        all_nf = false;
                if (all_nf)
                    r.final_answer = "Not found";
                else
                    r.final_answer = ""; // merge failed
            }
            if (r.final_answer.empty())
                r.status = "parse_failed";
            else
                r.status = detect_not_found(r.final_answer) ? "not_found" : "answered";
        }
        records.push_back(std::move(r));
    }

    if (!opts.run_dir.empty())
        write_records_jsonl(opts.run_dir + "/records.jsonl", records);
    return records;
}

std::string record_to_jsonl_line(const AnswerRecord& r) {
    nlohmann::ordered_json j;
    j["qa_id"] = r.qa_id;
    j["chunk_answers"] = r.chunk_answers;
    j["final_answer"] = r.final_answer;
    j["status"] = r.status;
    return j.dump();
}

AnswerRecord record_from_jsonl_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("records jsonl: ") + e.what());
    }
    AnswerRecord r;
    r.qa_id = j.at("qa_id").get<std::string>();
    r.chunk_answers = j.at("chunk_answers").get<std::vector<std::string>>();
    r.final_answer = j.at("final_answer").get<std::string>();
    r.status = j.at("status").get<std::string>();
    return r;
}

std::vector<AnswerRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open records file: " + path);
    std::vector<AnswerRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        out.push_back(record_from_jsonl_line(line));
    }
    return out;
}

void write_records_jsonl(const std::string& path, const std::vector<AnswerRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write records file: " + path);
    for (const auto& r : records)
        out << record_to_jsonl_line(r) << "\n";
}

} // namespace kgqa
