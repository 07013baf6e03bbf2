#pragma once

#include "kgqa/annotation.hpp"
#include "kgqa/chunking.hpp"
#include "kgqa/model_client.hpp"
#include "kgqa/prompts.hpp"
#include "kgqa/qagen.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

struct AnswerRecord {
    std::string qa_id;
    std::vector<std::string> chunk_answers; // per-chunk partial answer, "" when missing
    std::string final_answer;
    std::string status; // answered | not_found | parse_failed
};

// Fallback chain: whole text as JSON; first code-fenced block; outermost
// brace-balanced candidate; numbered-list lines ("1. ..." / "Q1: ...").
// Missing indices are simply absent from the result.
std::map<int, std::string> parse_response(const std::string& raw,
                                          const std::vector<int>& expected_indices);

// Single-question merge: identity for one partial, "Not found" short-circuit
// without a model call when every partial is Not found, otherwise one merge
// prompt round-trip.
std::string merge_partials(const std::string& question,
                           const std::vector<std::string>& partials, ModelClient& client,
                           const ModelConfig& cfg);

// Whitespace-collapsed concatenation, in document order, of the sentences
// containing every span bound in the question and every span realizing the
// answer. Throws ProvenanceError when a binding cannot be located.
std::string assemble_oracle_context(const QAPair& qa, const AnnotationSet& merged);

enum class EvalMode { Full, Oracle };

struct EvalOptions {
    EvalMode mode = EvalMode::Full;
    int batch_cap = kMaxBatchQuestions;
    int chunk_budget_tokens = 120000; // context limit minus prompt reserve
    int parallelism = 4;
    std::string run_dir; // journal + records live here; empty disables resume
};

// Append-only JSONL journal keyed by content hash; completed work units are
// skipped on rerun.
class Journal {
public:
    Journal() = default;
    explicit Journal(std::string path);
    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& raw);
    bool enabled() const { return !path_.empty(); }

private:
    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

// Two-stage protocol over a prepared corpus: chunk (full mode) or oracle
// contexts, batch questions, query the model per (chunk, batch), parse with
// the fallback chain, merge partials per question. Emits exactly one record
// per pair; per-unit errors become statuses, not aborts.
std::vector<AnswerRecord> run_evaluation(const std::vector<AnnotationSet>& corpus,
                                         const std::vector<QAPair>& pairs, ModelClient& client,
                                         const ModelConfig& cfg, const EvalOptions& opts);

std::string record_to_jsonl_line(const AnswerRecord& r);
AnswerRecord record_from_jsonl_line(const std::string& line);
std::vector<AnswerRecord> read_records_jsonl(const std::string& path);
void write_records_jsonl(const std::string& path, const std::vector<AnswerRecord>& records);

} // namespace kgqa
