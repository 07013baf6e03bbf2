#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

struct ScoreVector {
    double f1 = 0.0;
    double norm_edit_distance = 0.0;
    double cosine = 0.0;
    std::optional<int> judge; // 1-5 when collected
    bool not_found = false;
};

struct ErrorThresholds {
    double f1 = 0.5;
    double cosine = 0.5;
    double edit = 0.5;
};

struct ErrorFlags {
    bool low_f1 = false;
    bool low_cosine = false;
    bool high_edit = false;
    bool not_found = false;
};

struct EvalScoreRecord {
    std::string qa_id;
    std::string bucket;
    int p = 0, h = 0, so = 0, l = 0;
    std::vector<std::string> gold_answers;
    std::string model_answer;
    std::string status; // answered | not_found | parse_failed
    ScoreVector scores;
    ErrorFlags flags;
};

// Lowercase, punctuation stripped, whitespace collapsed, trimmed. Idempotent.
std::string normalize_text(std::string_view s);

// The canonical gold string: answers in canonical order joined with ", ".
std::string join_gold(const std::vector<std::string>& gold_answers);

// Token-multiset F1 between the normalized prediction and the normalized
// joined gold. 0 when either token list is empty.
double f1_word(std::string_view pred, const std::vector<std::string>& gold_answers);

// Levenshtein distance on normalized strings divided by the longer length;
// 0 when both sides are empty.
double norm_edit_distance(std::string_view pred, std::string_view gold);

// Cosine of term-frequency vectors over normalized tokens.
double cosine_similarity(std::string_view pred, std::string_view gold);

// True iff the normalized prediction is exactly "not found".
bool detect_not_found(std::string_view pred);

ScoreVector score_answer(const std::string& pred, const std::vector<std::string>& gold_answers);

ErrorFlags categorize_errors(const ScoreVector& scores, const ErrorThresholds& thresholds);

// Rubric prompt for the 1-5 judge; kept in sync with the golden file.
std::string build_judge_prompt(const std::string& question, const std::string& gold,
                               const std::string& prediction);

// First standalone integer in [1,5] in the judge's reply.
std::optional<int> parse_judge_reply(std::string_view reply);

class ModelClient;
struct ModelConfig;

// Sends the rubric prompt and parses the 1-5 score. A non-integer reply is
// retried once, then recorded as missing. Transport failures propagate after
// the client's own retry budget.
std::optional<int> llm_judge(const std::string& question, const std::string& gold,
                             const std::string& prediction, ModelClient& judge,
                             const ModelConfig& judge_cfg);

// --- aggregation ---

struct GroupSummary {
    std::string group;
    int count = 0;
    double mean_f1 = 0, mean_edit = 0, mean_cosine = 0;
    std::optional<double> mean_judge;
    double pct_not_found = 0, pct_low_f1 = 0, pct_low_cosine = 0, pct_high_edit = 0;
};

enum class GroupKey { Bucket, Level, Template, DimP, DimH, DimSO };

std::vector<GroupSummary> aggregate(const std::vector<EvalScoreRecord>& records, GroupKey key,
                                    const std::map<std::string, std::string>& qa_template = {});

std::string summaries_to_csv(const std::vector<GroupSummary>& summaries,
                             const std::string& key_name);

// --- correlations ---

struct CorrelationMatrices {
    std::vector<std::string> names;
    // NaN marks undefined entries (zero-variance columns).
    std::vector<std::vector<double>> pearson;
    std::vector<std::vector<double>> kendall;

    std::string to_csv() const;
};

// Pearson and Kendall tau-b over equal-length numeric columns. Requires at
// least two rows.
CorrelationMatrices correlations(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns);

} // namespace kgqa
