#include "kgqa/annotation.hpp"
#include "kgqa/config.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/harness.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/qagen.hpp"
#include "kgqa/query.hpp"
#include "kgqa/templates.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cstdio>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace kgqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitRunFailure = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path);
    out << content;
}

// Parses, merges and validates every .json annotation file in a directory.
// Unreadable files are reported and skipped.
std::vector<AnnotationSet> load_corpus(const std::string& dir, bool* had_errors = nullptr) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    std::vector<AnnotationSet> corpus;
    for (const auto& f : files) {
        try {
            auto a = merge_continuations(parse_annotation_file(read_file(f)));
            auto violations = validate_schema(a);
            if (!violations.empty()) {
                std::cerr << f << ": " << violations.size() << " schema violations, first: "
                          << violations.front().message << "\n";
                if (had_errors)
                    *had_errors = true;
                continue;
            }
            corpus.push_back(std::move(a));
        } catch (const std::exception& e) {
            std::cerr << f << ": " << e.what() << "\n";
            if (had_errors)
                *had_errors = true;
        }
    }
    std::sort(corpus.begin(), corpus.end(),
              [](const AnnotationSet& a, const AnnotationSet& b) { return a.doc_id < b.doc_id; });
    return corpus;
}

std::vector<QAPair> generate_pairs(const std::vector<AnnotationSet>& corpus,
                                   const GlobalConfig& cfg) {
    auto catalog = load_catalog(cfg.templates_path);
    std::vector<QAPair> all;
    for (const auto& doc : corpus) {
        auto g = build_graph(doc, cfg.namespaces);
        auto pairs = instantiate_all(catalog, g, doc.doc_id);
        all.insert(all.end(), pairs.begin(), pairs.end());
    }
    return all;
}

int cmd_stats(const std::string& dir, const std::string& out_dir) {
    bool had_errors = false;
    auto corpus = load_corpus(dir, &had_errors);
    if (corpus.empty()) {
        std::cerr << "no parseable annotation files in " << dir << "\n";
        return kExitInput;
    }
    auto stats = compute_corpus_stats(corpus);
    fs::create_directories(out_dir);
    write_file(out_dir + "/stats.csv", stats.to_csv());
    write_file(out_dir + "/stats.txt", stats.to_table());
    std::cout << stats.to_table();
    return kExitOk;
}

int cmd_build_kg(const std::string& dir, const std::string& out_dir, const GlobalConfig& cfg) {
    auto corpus = load_corpus(dir);
    if (corpus.empty()) {
        std::cerr << "no parseable annotation files in " << dir << "\n";
        return kExitInput;
    }
    fs::create_directories(out_dir);
    std::vector<KnowledgeGraph> graphs;
    for (const auto& doc : corpus) {
        auto g = build_graph(doc, cfg.namespaces);
        write_file(out_dir + "/" + doc.doc_id + ".ttl", serialize_turtle(g));
        graphs.push_back(std::move(g));
    }
    auto corpus_graph = union_graphs(graphs, cfg.namespaces);
    write_file(out_dir + "/corpus.ttl", serialize_turtle(corpus_graph));
    std::cout << "wrote " << graphs.size() << " document graphs + corpus.ttl ("
              << corpus_graph.size() << " triples)\n";
    return kExitOk;
}

int cmd_query(const std::string& ttl_path, const std::string& query_path,
              const GlobalConfig& cfg) {
    auto g = parse_turtle(read_file(ttl_path), cfg.namespaces);
    auto q = parse_query(read_file(query_path));
    std::cout << evaluate(q, g).to_tsv();
    return kExitOk;
}

int cmd_generate(const std::string& dir, const std::string& out_path, const GlobalConfig& cfg) {
    auto corpus = load_corpus(dir);
    if (corpus.empty()) {
        std::cerr << "no parseable annotation files in " << dir << "\n";
        return kExitInput;
    }
    auto all = generate_pairs(corpus, cfg);
    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? "."
                               : fs::path(out_path).parent_path().string());
    write_qa_jsonl(out_path, all);
    // Per-document files next to the corpus-level one.
    std::map<std::string, std::vector<QAPair>> per_doc;
    for (const auto& qa : all)
        per_doc[qa.doc_id].push_back(qa);
    auto stem_dir = fs::path(out_path).parent_path();
    for (const auto& [doc_id, pairs] : per_doc)
        write_qa_jsonl((stem_dir / (doc_id + ".qa.jsonl")).string(), pairs);
    std::cout << bucketize(all).to_string();
    return kExitOk;
}

int cmd_split(const std::string& qa_path, const std::string& dev_ids_path,
              const std::string& out_dir) {
    auto pairs = read_qa_jsonl(qa_path);
    std::vector<std::string> dev_ids;
    std::istringstream is(read_file(dev_ids_path));
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            dev_ids.push_back(line);
    }
    auto [dev, test] = split_dataset(pairs, dev_ids);
    fs::create_directories(out_dir);
    write_qa_jsonl(out_dir + "/dev.jsonl", dev);
    write_qa_jsonl(out_dir + "/test.jsonl", test);
    std::cout << "dev " << dev.size() << " pairs / test " << test.size() << " pairs\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& qa_path, const std::string& dir, const GlobalConfig& cfg,
                 const std::string& mode_name, const std::string& mock,
                 const std::string& run_dir) {
    auto corpus = load_corpus(dir);
    auto pairs = read_qa_jsonl(qa_path);

    EvalOptions opts;
    opts.mode = mode_name == "oracle" ? EvalMode::Oracle : EvalMode::Full;
    opts.batch_cap = cfg.batch_cap;
    opts.chunk_budget_tokens = cfg.chunk_budget();
    opts.parallelism = cfg.parallelism;
    opts.run_dir = run_dir;

    std::shared_ptr<ModelClient> client;
    if (mock == "gold-oracle" || mock == "scripted-failures") {
        std::map<std::string, GoldOracleClient::DocGold> per_doc;
        for (const auto& a : corpus) {
            per_doc[a.doc_id].doc_id = a.doc_id;
            per_doc[a.doc_id].doc_text = a.document_text;
        }
        for (const auto& qa : pairs)
            per_doc[qa.doc_id].gold_by_question[qa.question] = join_gold(qa.answers);
        std::vector<GoldOracleClient::DocGold> docs;
        for (auto& [id, d] : per_doc)
            docs.push_back(std::move(d));
        auto inner = std::make_shared<GoldOracleClient>(std::move(docs));
        if (mock == "scripted-failures")
            client = std::make_shared<ScriptedFailureClient>(inner, 1);
        else
            client = inner;
    } else if (mock == "always-not-found") {
        client = std::make_shared<NotFoundClient>();
    } else if (mock.empty()) {
        client = std::make_shared<HttpModelClient>();
    } else {
        std::cerr << "unknown mock profile: " << mock << "\n";
        return kExitConfig;
    }

    ModelConfig mc = cfg.evaluated;
    if (!mock.empty())
        mc.backoff_base_ms = 0;
    if (!run_dir.empty()) {
        fs::create_directories(run_dir);
        write_file(run_dir + "/config_snapshot.toml", config_to_toml(cfg));
    }
    auto records = run_evaluation(corpus, pairs, *client, mc, opts);
    if (run_dir.empty())
        write_records_jsonl("records.jsonl", records);

    int failed = 0;
    for (const auto& r : records)
        if (r.status == "parse_failed")
            ++failed;
    double pct = records.empty() ? 0.0 : 100.0 * failed / static_cast<double>(records.size());
    std::cout << records.size() << " records, " << failed << " failed units (" << pct << "%)\n";
    if (pct > cfg.fail_threshold_pct)
        return kExitRunFailure;
    return kExitOk;
}

int cmd_score(const std::string& records_path, const std::string& qa_path,
              const GlobalConfig& cfg, bool with_judge, const std::string& judge_mock,
              const std::string& out_dir) {
    auto records = read_records_jsonl(records_path);
    auto pairs = read_qa_jsonl(qa_path);
    std::map<std::string, const QAPair*> by_id;
    for (const auto& qa : pairs)
        by_id[qa.qa_id] = &qa;

    std::shared_ptr<ModelClient> judge_client;
    if (with_judge) {
        if (judge_mock == "perfect")
            judge_client = nullptr; // handled inline below
        else
            judge_client = std::make_shared<HttpModelClient>();
    }

    std::vector<EvalScoreRecord> scored;
    std::map<std::string, std::string> qa_template;
    for (const auto& r : records) {
        auto it = by_id.find(r.qa_id);
        if (it == by_id.end()) {
            std::cerr << "unknown qa_id " << r.qa_id << ", skipped\n";
            continue;
        }
        const QAPair& qa = *it->second;
        EvalScoreRecord s;
        s.qa_id = r.qa_id;
        s.bucket = qa.bucket;
        s.p = qa.p;
        s.h = qa.h;
        s.so = qa.so;
        s.l = qa.l;
        s.gold_answers = qa.answers;
        s.model_answer = r.final_answer;
        s.status = r.status;
        s.scores = score_answer(r.final_answer, qa.answers);
        if (with_judge) {
            if (judge_client) {
                try {
                    s.scores.judge = llm_judge(qa.question, join_gold(qa.answers),
                                               r.final_answer, *judge_client, cfg.judge);
                } catch (const std::exception& e) {
                    std::cerr << "judge failed for " << r.qa_id << ": " << e.what() << "\n";
                }
            } else {
                // mock judge: 5 for exact normalized match, else 1
                s.scores.judge =
                    normalize_text(r.final_answer) == normalize_text(join_gold(qa.answers)) ? 5
                                                                                            : 1;
            }
        }
        s.flags = categorize_errors(s.scores, cfg.thresholds);
        qa_template[s.qa_id] = qa.template_id;
        scored.push_back(std::move(s));
    }

    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/scores.jsonl", std::ios::binary);
        for (const auto& s : scored) {
            nlohmann::ordered_json j;
            j["qa_id"] = s.qa_id;
            j["bucket"] = s.bucket;
            j["P"] = s.p;
            j["H"] = s.h;
            j["SO"] = s.so;
            j["L"] = s.l;
            j["model_answer"] = s.model_answer;
            j["status"] = s.status;
            j["f1"] = s.scores.f1;
            j["norm_edit_distance"] = s.scores.norm_edit_distance;
            j["cosine"] = s.scores.cosine;
            if (s.scores.judge)
                j["judge"] = *s.scores.judge;
            j["flags"] = {{"not_found", s.flags.not_found},
                          {"low_f1", s.flags.low_f1},
                          {"low_cosine", s.flags.low_cosine},
                          {"high_edit", s.flags.high_edit}};
            out << j.dump() << "\n";
        }
    }
    write_file(out_dir + "/summary_bucket.csv",
               summaries_to_csv(aggregate(scored, GroupKey::Bucket), "bucket"));
    write_file(out_dir + "/summary_level.csv",
               summaries_to_csv(aggregate(scored, GroupKey::Level), "level"));
    write_file(out_dir + "/summary_template.csv",
               summaries_to_csv(aggregate(scored, GroupKey::Template, qa_template), "template"));
    write_file(out_dir + "/summary_so.csv",
               summaries_to_csv(aggregate(scored, GroupKey::DimSO), "so"));
    write_file(out_dir + "/summary_hops.csv",
               summaries_to_csv(aggregate(scored, GroupKey::DimH), "hops"));
    write_file(out_dir + "/summary_plurality.csv",
               summaries_to_csv(aggregate(scored, GroupKey::DimP), "plurality"));

    // Long-format CSV for trend plots over levels.
    {
        std::ostringstream os;
        os << "level,metric,value\n";
        for (const auto& s : aggregate(scored, GroupKey::Level)) {
            os << s.group << ",pct_not_found," << s.pct_not_found << "\n";
            os << s.group << ",pct_low_f1," << s.pct_low_f1 << "\n";
            os << s.group << ",pct_low_cosine," << s.pct_low_cosine << "\n";
            os << s.group << ",pct_high_edit," << s.pct_high_edit << "\n";
        }
        write_file(out_dir + "/trends_level.csv", os.str());
    }

    if (scored.size() >= 2) {
        std::vector<std::string> names{"f1", "edit", "cosine"};
        std::vector<std::vector<double>> cols(3);
        for (const auto& s : scored) {
            cols[0].push_back(s.scores.f1);
            cols[1].push_back(s.scores.norm_edit_distance);
            cols[2].push_back(s.scores.cosine);
        }
        bool have_judge = true;
        for (const auto& s : scored)
            if (!s.scores.judge)
                have_judge = false;
        if (have_judge) {
            names.push_back("judge");
            cols.emplace_back();
            for (const auto& s : scored)
                cols.back().push_back(static_cast<double>(*s.scores.judge));
        }
        write_file(out_dir + "/correlations.csv", correlations(names, cols).to_csv());
    }

    auto bucket_summary = aggregate(scored, GroupKey::Bucket);
    std::cout << "Bucket      N     F1";
    bool any_judge = false;
    for (const auto& s : bucket_summary)
        if (s.mean_judge)
            any_judge = true;
    if (any_judge)
        std::cout << "   Judge";
    std::cout << "\n";
    for (const char* b : {"Easy", "Medium", "Hard"}) {
        for (const auto& s : bucket_summary) {
            if (s.group != b)
                continue;
            std::printf("%-8s %4d %6.4f", s.group.c_str(), s.count, s.mean_f1);
            if (s.mean_judge)
                std::printf(" %6.4f", *s.mean_judge);
            std::printf("\n");
        }
    }
    std::cout << summaries_to_csv(bucket_summary, "bucket");
    std::cout << "thresholds: f1<" << cfg.thresholds.f1 << " cosine<" << cfg.thresholds.cosine
              << " edit>" << cfg.thresholds.edit << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layered knowledge-graph QA generation and long-context evaluation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "TOML config file");

    std::string ann_dir, out_dir = "out", out_path = "qa.jsonl";
    std::string ttl_path, query_path, qa_path, dev_ids_path, records_path;
    std::string mode = "full", mock, run_dir = "runs/run1", judge_mock;
    std::string thresholds_arg;
    int parallelism_override = 0;
    bool with_judge = false;

    auto* stats = app.add_subcommand("stats", "Corpus statistics table");
    stats->add_option("annotations", ann_dir, "annotation directory")->required();
    stats->add_option("--out", out_dir, "output directory");

    auto* build = app.add_subcommand("build-kg", "Build Turtle knowledge graphs");
    build->add_option("annotations", ann_dir, "annotation directory")->required();
    build->add_option("--out", out_dir, "output directory");

    auto* query = app.add_subcommand("query", "Evaluate a query against a .ttl graph");
    query->add_option("graph", ttl_path, "Turtle file")->required();
    query->add_option("queryfile", query_path, "query text file")->required();

    auto* generate = app.add_subcommand("generate", "Generate QA pairs");
    generate->add_option("annotations", ann_dir, "annotation directory")->required();
    generate->add_option("--out", out_path, "corpus QA JSONL path");

    auto* split = app.add_subcommand("split", "Split QA pairs into dev/test by document");
    split->add_option("qafile", qa_path, "QA JSONL")->required();
    split->add_option("devids", dev_ids_path, "file with one dev doc id per line")->required();
    split->add_option("--out", out_dir, "output directory");

    auto* evaluate = app.add_subcommand("evaluate", "Run the prompting harness");
    evaluate->add_option("qafile", qa_path, "QA JSONL")->required();
    evaluate->add_option("annotations", ann_dir, "annotation directory")->required();
    evaluate->add_option("--mode", mode, "full|oracle")->check(CLI::IsMember({"full", "oracle"}));
    evaluate->add_option("--mock", mock,
                         "gold-oracle|always-not-found|scripted-failures (omit for live)");
    evaluate->add_option("--out", run_dir, "run directory (journal + records)");
    evaluate->add_option("--parallelism", parallelism_override, "bounded worker count");

    auto* score = app.add_subcommand("score", "Score records against gold");
    score->add_option("records", records_path, "records.jsonl")->required();
    score->add_option("qafile", qa_path, "QA JSONL")->required();
    score->add_flag("--judge", with_judge, "collect judge scores");
    score->add_option("--judge-mock", judge_mock, "use 'perfect' for an offline judge double");
    score->add_option("--out", out_dir, "output directory");
    score->add_option("--thresholds", thresholds_arg,
                      "error thresholds as f1,cosine,edit (e.g. 0.5,0.5,0.5)");

    CLI11_PARSE(app, argc, argv);

    try {
        GlobalConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (parallelism_override > 0)
            cfg.parallelism = parallelism_override;
        if (!thresholds_arg.empty()) {
            double f1 = 0, cos = 0, edit = 0;
            if (std::sscanf(thresholds_arg.c_str(), "%lf,%lf,%lf", &f1, &cos, &edit) != 3)
                throw ConfigError("--thresholds expects f1,cosine,edit");
            cfg.thresholds = {f1, cos, edit};
        }
        if (stats->parsed())
            return cmd_stats(ann_dir, out_dir);
        if (build->parsed())
            return cmd_build_kg(ann_dir, out_dir, cfg);
        if (query->parsed())
            return cmd_query(ttl_path, query_path, cfg);
        if (generate->parsed())
            return cmd_generate(ann_dir, out_path, cfg);
        if (split->parsed())
            return cmd_split(qa_path, dev_ids_path, out_dir);
        if (evaluate->parsed())
            return cmd_evaluate(qa_path, ann_dir, cfg, mode, mock, run_dir);
        if (score->parsed())
            return cmd_score(records_path, qa_path, cfg, with_judge, judge_mock, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ReferenceError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailure;
    }
    return kExitOk;
}
