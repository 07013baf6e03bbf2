#include "kgqa/metrics.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/model_client.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace kgqa {

std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true;
    for (unsigned char c : s) {
        char mapped;
        if (std::isalnum(c)) {
            mapped = static_cast<char>(std::tolower(c));
        } else if (std::isspace(c) || std::ispunct(c)) {
            mapped = ' ';
        } else {
            mapped = static_cast<char>(c); // non-ASCII bytes pass through
        }
        if (mapped == ' ') {
            if (!in_ws) {
                out.push_back(' ');
                in_ws = true;
            }
        } else {
            out.push_back(mapped);
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

std::string join_gold(const std::vector<std::string>& gold_answers) {
    std::string joined;
    for (std::size_t i = 0; i < gold_answers.size(); ++i)
        joined += (i ? ", " : "") + gold_answers[i];
    return joined;
}

namespace {

std::vector<std::string> tokens_of(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream is{normalize_text(s)};
    std::string tok;
    while (is >> tok)
        out.push_back(tok);
    return out;
}

std::map<std::string, int> counts_of(const std::vector<std::string>& tokens) {
    std::map<std::string, int> out;
    for (const auto& t : tokens)
        ++out[t];
    return out;
}

} // namespace

double f1_word(std::string_view pred, const std::vector<std::string>& gold_answers) {
    if (gold_answers.empty())
        throw ValidationError("f1_word: gold answers must be non-empty");
    auto pred_tokens = tokens_of(pred);
    auto gold_tokens = tokens_of(join_gold(gold_answers));
    if (pred_tokens.empty() || gold_tokens.empty())
        return 0.0;
    auto pc = counts_of(pred_tokens);
    auto gc = counts_of(gold_tokens);
    int overlap = 0;
    for (const auto& [tok, n] : pc) {
        auto it = gc.find(tok);
        if (it != gc.end())
            overlap += std::min(n, it->second);
    }
    if (overlap == 0)
        return 0.0;
    double precision = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

double norm_edit_distance(std::string_view pred, std::string_view gold) {
    std::string a = normalize_text(pred);
    std::string b = normalize_text(gold);
    if (a.empty() && b.empty())
        return 0.0;
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

double cosine_similarity(std::string_view pred, std::string_view gold) {
    auto pc = counts_of(tokens_of(pred));
    auto gc = counts_of(tokens_of(gold));
    if (pc.empty() || gc.empty())
        return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (const auto& [tok, n] : pc) {
        na += static_cast<double>(n) * n;
        auto it = gc.find(tok);
        if (it != gc.end())
            dot += static_cast<double>(n) * it->second;
    }
    for (const auto& [tok, n] : gc)
        nb += static_cast<double>(n) * n;
    if (dot == 0)
        return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool detect_not_found(std::string_view pred) {
    return normalize_text(pred) == "not found";
}

ScoreVector score_answer(const std::string& pred, const std::vector<std::string>& gold_answers) {
    ScoreVector s;
    std::string gold = join_gold(gold_answers);
    s.f1 = f1_word(pred, gold_answers);
    s.norm_edit_distance = norm_edit_distance(pred, gold);
    s.cosine = cosine_similarity(pred, gold);
    s.not_found = detect_not_found(pred);
    return s;
}

ErrorFlags categorize_errors(const ScoreVector& scores, const ErrorThresholds& thresholds) {
    ErrorFlags f;
    f.low_f1 = scores.f1 < thresholds.f1;
    f.low_cosine = scores.cosine < thresholds.cosine;
    f.high_edit = scores.norm_edit_distance > thresholds.edit;
    f.not_found = scores.not_found;
    return f;
}

std::string build_judge_prompt(const std::string& question, const std::string& gold,
                               const std::string& prediction) {
    std::ostringstream os;
    os << "You are grading the answer of a question-answering system against a reference "
          "answer.\n"
       << "Rate the response on a scale from 1 to 5, according to the criteria below.\n"
       << "1: response is irrelevant or does not match the actual answer;\n"
       << "2: response is somewhat relevant but does not match the actual answer;\n"
       << "3: response shows slight similarity but lacks accuracy;\n"
       << "4: response is largely relevant and accurate;\n"
       << "5: response is a perfect match to the actual answer.\n"
       << "\n"
       << "Question: " << question << "\n"
       << "Reference answer: " << gold << "\n"
       << "Response: " << prediction << "\n"
       << "\n"
       << "Reply with a single integer from 1 to 5 and nothing else.\n";
    return os.str();
}

std::optional<int> parse_judge_reply(std::string_view reply) {
    for (std::size_t i = 0; i < reply.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(reply[i]);
        if (std::isdigit(c)) {
            // standalone digit, not part of a longer number
            bool prev_digit = i > 0 && std::isdigit(static_cast<unsigned char>(reply[i - 1]));
            bool next_digit = i + 1 < reply.size() &&
                              std::isdigit(static_cast<unsigned char>(reply[i + 1]));
            if (prev_digit || next_digit)
                continue;
            int v = c - '0';
            if (v >= 1 && v <= 5)
                return v;
        }
    }
    return std::nullopt;
}

std::optional<int> llm_judge(const std::string& question, const std::string& gold,
                             const std::string& prediction, ModelClient& judge,
                             const ModelConfig& judge_cfg) {
    PromptSpec prompt;
    prompt.system_text = build_judge_prompt(question, gold, prediction);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply = call_model(judge, prompt, judge_cfg);
        if (auto score = parse_judge_reply(reply))
            return score;
    }
    return std::nullopt;
}

std::vector<GroupSummary> aggregate(const std::vector<EvalScoreRecord>& records, GroupKey key,
                                    const std::map<std::string, std::string>& qa_template) {
    std::map<std::string, std::vector<const EvalScoreRecord*>> groups;
    for (const auto& r : records) {
        std::string g;
        switch (key) {
        case GroupKey::Bucket: g = r.bucket; break;
        case GroupKey::Level: g = "L" + std::to_string(r.l); break;
        case GroupKey::Template: {
            auto it = qa_template.find(r.qa_id);
            g = it != qa_template.end() ? it->second : "unknown";
            break;
        }
        case GroupKey::DimP: g = "P" + std::to_string(r.p); break;
        case GroupKey::DimH: g = "H" + std::to_string(r.h); break;
        case GroupKey::DimSO: g = "SO" + std::to_string(r.so); break;
        }
        groups[g].push_back(&r);
    }
    std::vector<GroupSummary> out;
    for (const auto& [name, members] : groups) {
        GroupSummary s;
        s.group = name;
        s.count = static_cast<int>(members.size());
        double judge_sum = 0;
        int judge_n = 0;
        int nf = 0, lf = 0, lcs = 0, he = 0;
        for (const auto* r : members) {
            s.mean_f1 += r->scores.f1;
            s.mean_edit += r->scores.norm_edit_distance;
            s.mean_cosine += r->scores.cosine;
            if (r->scores.judge) {
                judge_sum += *r->scores.judge;
                ++judge_n;
            }
            nf += r->flags.not_found;
            lf += r->flags.low_f1;
            lcs += r->flags.low_cosine;
            he += r->flags.high_edit;
        }
        double n = static_cast<double>(s.count);
        s.mean_f1 /= n;
        s.mean_edit /= n;
        s.mean_cosine /= n;
        if (judge_n > 0)
            s.mean_judge = judge_sum / judge_n;
        s.pct_not_found = 100.0 * nf / n;
        s.pct_low_f1 = 100.0 * lf / n;
        s.pct_low_cosine = 100.0 * lcs / n;
        s.pct_high_edit = 100.0 * he / n;
        out.push_back(std::move(s));
    }
    return out;
}

std::string summaries_to_csv(const std::vector<GroupSummary>& summaries,
                             const std::string& key_name) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << key_name
       << ",count,mean_f1,mean_edit,mean_cosine,mean_judge,pct_not_found,pct_low_f1,"
          "pct_low_cosine,pct_high_edit\n";
    for (const auto& s : summaries) {
        os << s.group << "," << s.count << "," << s.mean_f1 << "," << s.mean_edit << ","
           << s.mean_cosine << ",";
        if (s.mean_judge)
            os << *s.mean_judge;
        os << "," << s.pct_not_found << "," << s.pct_low_f1 << "," << s.pct_low_cosine << ","
           << s.pct_high_edit << "\n";
    }
    return os.str();
}

namespace {

double pearson_of(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

// Kendall tau-b with tie correction.
double kendall_of(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j];
            double dy = y[i] - y[j];
            if (dx == 0 && dy == 0)
                continue; // tied in both, counted in neither n1-only nor n2-only
            if (dx == 0) {
                ++ties_x;
            } else if (dy == 0) {
                ++ties_y;
            } else if ((dx > 0) == (dy > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    double denom_x = static_cast<double>(concordant + discordant + ties_x);
    double denom_y = static_cast<double>(concordant + discordant + ties_y);
    if (denom_x == 0 || denom_y == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(concordant - discordant) / std::sqrt(denom_x * denom_y);
}

} // namespace

CorrelationMatrices correlations(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns) {
    if (columns.size() != names.size())
        throw ValidationError("correlations: names/columns size mismatch");
    if (columns.empty() || columns.front().size() < 2)
        throw ValidationError("correlations: need at least 2 rows");
    for (const auto& c : columns)
        if (c.size() != columns.front().size())
            throw ValidationError("correlations: ragged columns");

    CorrelationMatrices m;
    m.names = names;
    const std::size_t k = columns.size();
    m.pearson.assign(k, std::vector<double>(k, 1.0));
    m.kendall.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            double p = (i == j) ? 1.0 : pearson_of(columns[i], columns[j]);
            double t = (i == j) ? 1.0 : kendall_of(columns[i], columns[j]);
            m.pearson[i][j] = m.pearson[j][i] = p;
            m.kendall[i][j] = m.kendall[j][i] = t;
        }
    }
    return m;
}

std::string CorrelationMatrices::to_csv() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    auto emit = [&](const char* title, const std::vector<std::vector<double>>& mat) {
        os << title;
        for (const auto& n : names)
            os << "," << n;
        os << "\n";
        for (std::size_t i = 0; i < names.size(); ++i) {
            os << names[i];
            for (std::size_t j = 0; j < names.size(); ++j) {
                os << ",";
                if (std::isnan(mat[i][j]))
                    os << "undefined";
                else
                    os << mat[i][j];
            }
            os << "\n";
        }
    };
    emit("pearson", pearson);
    emit("kendall", kendall);
    return os.str();
}

} // namespace kgqa
