#pragma once

#include "kgqa/kg.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/model_client.hpp"

#include <map>
#include <string>

namespace kgqa {

// Flat TOML subset: [table.sub] headers, key = "string" | number | bool,
// '#' comments. Values keyed as "table.sub.key".
std::map<std::string, std::string> parse_toml_subset(const std::string& text);

struct GlobalConfig {
    NamespaceConfig namespaces;
    std::string templates_path; // defaults to the in-repo catalog

    int context_limit_tokens = 128000;
    int prompt_overhead_tokens = 8000;
    int batch_cap = 50;

    ModelConfig evaluated;
    ModelConfig judge;
    ModelConfig merge;

    ErrorThresholds thresholds;

    int parallelism = 4;
    double fail_threshold_pct = 50.0; // run fails above this unit-failure rate

    int chunk_budget() const { return context_limit_tokens - prompt_overhead_tokens; }
};

// Defaults only; used when no --config is given.
GlobalConfig default_config();

// Throws ConfigError on unreadable files, bad values, batch cap > 50 or a
// non-zero temperature.
GlobalConfig load_config(const std::string& path);

// Snapshot for run provenance.
std::string config_to_toml(const GlobalConfig& cfg);

} // namespace kgqa
