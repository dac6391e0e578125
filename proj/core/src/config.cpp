#include "critex/config.hpp"

#include <chrono>
#include <cstdlib>
#include <set>

#include "critex/io.hpp"

namespace critex::config {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["backend_url"] = backend_url;
    j["backend_model"] = backend_model;
    j["backend_api_key"] = backend_api_key.empty() ? "" : "<set>";
    j["backend_max_tokens"] = backend_max_tokens;
    j["backend_timeout_seconds"] = backend_timeout_seconds;
    j["judge_backend_url"] = judge_backend_url;
    j["judge_model"] = judge_model;
    j["offline"] = offline;
    j["transcript_path"] = transcript_path;
    j["registry_path"] = registry_path;
    j["tau"] = tau;
    j["k_max"] = k_max;
    j["stage_budget_seconds"] = stage_budget_seconds;
    j["rrf_k"] = rrf_k;
    j["bm25_k1"] = bm25_k1;
    j["bm25_b"] = bm25_b;
    j["chunk_budget"] = chunk_budget;
    j["chunk_overlap"] = chunk_overlap;
    j["refine_threshold"] = refine_threshold;
    j["embedding_url"] = embedding_url;
    j["converter_command"] = converter_command;
    j["internal_doc_id"] = internal_doc_id;
    j["eurlex_base_url"] = eurlex_base_url;
    j["prompts_dir"] = prompts_dir;
    j["cache_dir"] = cache_dir;
    j["index_dir"] = index_dir;
    j["input_dir"] = input_dir;
    j["input_fetch_base"] = input_fetch_base;
    j["output_dir"] = output_dir;
    j["parallelism"] = parallelism;
    j["strict"] = strict;
    j["enrich"] = enrich;
    return j;
}

RunConfig load(const std::optional<std::filesystem::path>& config_file) {
    RunConfig config;
    if (config_file) {
        json j;
        try {
            j = json::parse(io::read_file(*config_file));
        } catch (const std::exception& e) {
            throw ConfigError("cannot read config " + config_file->string() + ": " + e.what());
        }
        static const std::set<std::string> known = {
            "backend_url",    "backend_model",   "backend_max_tokens", "backend_timeout_seconds",
            "judge_backend_url", "judge_model",  "index_dir",          "input_fetch_base",
            "offline",        "transcript_path", "registry_path",      "tau",
            "k_max",          "stage_budget_seconds", "rrf_k",         "bm25_k1",
            "bm25_b",         "chunk_budget",    "chunk_overlap",      "refine_threshold",
            "embedding_url",  "converter_command", "internal_doc_id",  "eurlex_base_url",
            "prompts_dir",    "cache_dir",       "input_dir",          "output_dir",
            "parallelism",    "strict",          "enrich"};
        for (const auto& [key, _] : j.items()) {
            if (!known.count(key)) throw ConfigError("unknown config key: " + key);
        }
        read_key(j, "backend_url", config.backend_url);
        read_key(j, "backend_model", config.backend_model);
        read_key(j, "backend_max_tokens", config.backend_max_tokens);
        read_key(j, "backend_timeout_seconds", config.backend_timeout_seconds);
        read_key(j, "judge_backend_url", config.judge_backend_url);
        read_key(j, "judge_model", config.judge_model);
        read_key(j, "offline", config.offline);
        read_key(j, "transcript_path", config.transcript_path);
        read_key(j, "registry_path", config.registry_path);
        read_key(j, "tau", config.tau);
        read_key(j, "k_max", config.k_max);
        read_key(j, "stage_budget_seconds", config.stage_budget_seconds);
        read_key(j, "rrf_k", config.rrf_k);
        read_key(j, "bm25_k1", config.bm25_k1);
        read_key(j, "bm25_b", config.bm25_b);
        read_key(j, "chunk_budget", config.chunk_budget);
        read_key(j, "chunk_overlap", config.chunk_overlap);
        read_key(j, "refine_threshold", config.refine_threshold);
        read_key(j, "embedding_url", config.embedding_url);
        read_key(j, "converter_command", config.converter_command);
        read_key(j, "internal_doc_id", config.internal_doc_id);
        read_key(j, "eurlex_base_url", config.eurlex_base_url);
        read_key(j, "prompts_dir", config.prompts_dir);
        read_key(j, "cache_dir", config.cache_dir);
        read_key(j, "index_dir", config.index_dir);
        read_key(j, "input_dir", config.input_dir);
        read_key(j, "input_fetch_base", config.input_fetch_base);
        read_key(j, "output_dir", config.output_dir);
        read_key(j, "parallelism", config.parallelism);
        read_key(j, "strict", config.strict);
        read_key(j, "enrich", config.enrich);
    }
    apply_env(config);
    if (config.tau <= 0 || config.tau > 1) throw ConfigError("tau must lie in (0, 1]");
    if (config.k_max < 1) throw ConfigError("k_max must be >= 1");
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    return config;
}

void apply_env(RunConfig& config) {
    if (const char* key = std::getenv("CRITEX_API_KEY")) config.backend_api_key = key;
    if (const char* offline = std::getenv("CRITEX_OFFLINE")) {
        std::string v = offline;
        config.offline = !(v.empty() || v == "0" || v == "false");
    }
    if (const char* prompts = std::getenv("CRITEX_PROMPTS_DIR")) config.prompts_dir = prompts;
}

nlohmann::ordered_json make_manifest(const RunConfig& config,
                                     const std::vector<std::string>& inputs,
                                     const std::vector<std::string>& outputs) {
    nlohmann::ordered_json manifest;
    manifest["config"] = config.to_json();
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    manifest["timestamps"] = {
        {"written_unix_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    return manifest;
}

}  // namespace critex::config
