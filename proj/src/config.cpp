#include "kgqa/config.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/templates.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace kgqa {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            in_string = !in_string;
        else if (line[i] == '#' && !in_string)
            return line.substr(0, i);
    }
    return line;
}

} // namespace

std::map<std::string, std::string> parse_toml_subset(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line, table;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated table header");
            table = trim(line.substr(1, line.size() - 2));
            if (table.empty())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty table name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated string");
            std::string decoded;
            for (std::size_t i = 1; i + 1 < value.size(); ++i) {
                if (value[i] == '\\' && i + 2 < value.size()) {
                    ++i;
                    switch (value[i]) {
                    case 'n': decoded.push_back('\n'); break;
                    case 't': decoded.push_back('\t'); break;
                    case '"': decoded.push_back('"'); break;
                    case '\\': decoded.push_back('\\'); break;
                    default: decoded.push_back(value[i]);
                    }
                } else {
                    decoded.push_back(value[i]);
                }
            }
            value = decoded;
        }
        std::string full_key = table.empty() ? key : table + "." + key;
        out[full_key] = value;
    }
    return out;
}

GlobalConfig default_config() {
    GlobalConfig cfg;
    cfg.templates_path = default_catalog_path();
    cfg.evaluated.endpoint = "https://api.openai.com/v1/chat/completions";
    cfg.evaluated.model_name = "gpt-4o";
    cfg.evaluated.api_key_env = "OPENAI_API_KEY";
    cfg.judge = cfg.evaluated;
    cfg.merge = cfg.evaluated; // merging model defaults to the evaluated one
    return cfg;
}

namespace {

void read_model(const std::map<std::string, std::string>& kv, const std::string& prefix,
                ModelConfig& m) {
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(prefix + "." + key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = get("endpoint"))
        m.endpoint = *v;
    if (auto* v = get("name"))
        m.model_name = *v;
    if (auto* v = get("style"))
        m.payload_style = *v;
    if (auto* v = get("temperature"))
        m.temperature = std::stod(*v);
    if (auto* v = get("max_retries"))
        m.max_retries = std::stoi(*v);
    if (auto* v = get("timeout_seconds"))
        m.timeout_seconds = std::stoi(*v);
    if (auto* v = get("backoff_base_ms"))
        m.backoff_base_ms = std::stoi(*v);
    if (auto* v = get("api_key_env"))
        m.api_key_env = *v;
    if (m.temperature != 0.0)
        throw ConfigError(prefix + ".temperature must be 0.0");
}

} // namespace

GlobalConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto kv = parse_toml_subset(buf.str());

    GlobalConfig cfg = default_config();
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (auto* v = get("paths.templates"))
        cfg.templates_path = *v;
    if (auto* v = get("chunking.context_limit_tokens"))
        cfg.context_limit_tokens = std::stoi(*v);
    if (auto* v = get("chunking.prompt_overhead_tokens"))
        cfg.prompt_overhead_tokens = std::stoi(*v);
    if (auto* v = get("chunking.batch_size"))
        cfg.batch_cap = std::stoi(*v);
    if (cfg.batch_cap < 1 || cfg.batch_cap > 50)
        throw ConfigError("chunking.batch_size must be in [1,50]");
    if (cfg.chunk_budget() <= 0)
        throw ConfigError("context limit must exceed the prompt overhead reserve");

    auto& ns = cfg.namespaces;
    struct {
        const char* key;
        std::string* field;
    } ns_keys[] = {
        {"namespaces.base", &ns.base},
        {"namespaces.organization", &ns.organization},
        {"namespaces.person", &ns.person},
        {"namespaces.location", &ns.location},
        {"namespaces.org_role", &ns.org_role},
        {"namespaces.org_sub_role", &ns.org_sub_role},
        {"namespaces.person_position", &ns.person_position},
        {"namespaces.location_type", &ns.location_type},
    };
    for (const auto& e : ns_keys)
        if (auto* v = get(e.key))
            *e.field = *v;

    read_model(kv, "models.evaluated", cfg.evaluated);
    cfg.judge = cfg.evaluated;
    cfg.merge = cfg.evaluated;
    read_model(kv, "models.judge", cfg.judge);
    read_model(kv, "models.merge", cfg.merge);

    if (auto* v = get("thresholds.f1"))
        cfg.thresholds.f1 = std::stod(*v);
    if (auto* v = get("thresholds.cosine"))
        cfg.thresholds.cosine = std::stod(*v);
    if (auto* v = get("thresholds.edit"))
        cfg.thresholds.edit = std::stod(*v);

    if (auto* v = get("run.parallelism"))
        cfg.parallelism = std::stoi(*v);
    if (auto* v = get("run.fail_threshold_pct"))
        cfg.fail_threshold_pct = std::stod(*v);
    if (cfg.parallelism < 1)
        throw ConfigError("run.parallelism must be >= 1");
    return cfg;
}

std::string config_to_toml(const GlobalConfig& cfg) {
    std::ostringstream os;
    os << "[paths]\n"
       << "templates = \"" << cfg.templates_path << "\"\n\n";
    os << "[namespaces]\n"
       << "base = \"" << cfg.namespaces.base << "\"\n"
       << "organization = \"" << cfg.namespaces.organization << "\"\n"
       << "person = \"" << cfg.namespaces.person << "\"\n"
       << "location = \"" << cfg.namespaces.location << "\"\n"
       << "org_role = \"" << cfg.namespaces.org_role << "\"\n"
       << "org_sub_role = \"" << cfg.namespaces.org_sub_role << "\"\n"
       << "person_position = \"" << cfg.namespaces.person_position << "\"\n"
       << "location_type = \"" << cfg.namespaces.location_type << "\"\n\n";
    os << "[chunking]\n"
       << "context_limit_tokens = " << cfg.context_limit_tokens << "\n"
       << "prompt_overhead_tokens = " << cfg.prompt_overhead_tokens << "\n"
       << "batch_size = " << cfg.batch_cap << "\n\n";
    auto model = [&](const char* name, const ModelConfig& m) {
        os << "[models." << name << "]\n"
           << "endpoint = \"" << m.endpoint << "\"\n"
           << "name = \"" << m.model_name << "\"\n"
           << "style = \"" << m.payload_style << "\"\n"
           << "temperature = 0.0\n"
           << "max_retries = " << m.max_retries << "\n"
           << "timeout_seconds = " << m.timeout_seconds << "\n"
           << "backoff_base_ms = " << m.backoff_base_ms << "\n"
           << "api_key_env = \"" << m.api_key_env << "\"\n\n";
    };
    model("evaluated", cfg.evaluated);
    model("judge", cfg.judge);
    model("merge", cfg.merge);
    os << "[thresholds]\n"
       << "f1 = " << cfg.thresholds.f1 << "\n"
       << "cosine = " << cfg.thresholds.cosine << "\n"
       << "edit = " << cfg.thresholds.edit << "\n\n";
    os << "[run]\n"
       << "parallelism = " << cfg.parallelism << "\n"
       << "fail_threshold_pct = " << cfg.fail_threshold_pct << "\n";
    return os.str();
}

} // namespace kgqa
