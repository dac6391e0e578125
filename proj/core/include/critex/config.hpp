#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resolved run configuration. Precedence: CLI flags > environment >
/// config file > defaults. Every parameter is echoed into the run
/// manifest written alongside outputs.
struct RunConfig {
    // Chat-completion backend
    std::string backend_url;
    std::string backend_model;
    std::string backend_api_key;  // env CRITEX_API_KEY
    int backend_max_tokens = 2048;
    int backend_timeout_seconds = 120;

    // Judge backend (evaluation); falls back to the pipeline backend.
    std::string judge_backend_url;
    std::string judge_model;

    // Scripted / offline modes
    bool offline = false;  // env CRITEX_OFFLINE=1
    std::string transcript_path;  // scripted backend replay file
    std::string registry_path;    // in-memory registry accept-set (offline)

    // ODR loop
    double tau = 0.7;
    int k_max = 3;
    int stage_budget_seconds = 120;

    // Retrieval
    int rrf_k = 60;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    int chunk_budget = 512;
    int chunk_overlap = 64;
    double refine_threshold = 0.75;
    std::string embedding_url;  // empty = sparse-only
    std::string converter_command;
    std::string internal_doc_id = "annex";

    // Registry / fetch endpoints
    std::string eurlex_base_url = "https://eur-lex.europa.eu";

    // Paths
    std::string prompts_dir;
    std::string cache_dir = "cache";
    std::string index_dir;  // persisted retrieval indexes; empty = in-memory only
    std::string input_dir;
    std::string input_fetch_base;  // optional HTTP base for activity HTML
    std::string output_dir = "out";

    // Execution
    int parallelism = 1;
    bool strict = false;
    bool enrich = false;

    nlohmann::ordered_json to_json() const;
};

/// Loads a JSON config file and merges environment variables on top.
/// Missing file path yields defaults; unknown keys are errors.
RunConfig load(const std::optional<std::filesystem::path>& config_file);

/// Applies environment overrides (CRITEX_API_KEY, CRITEX_OFFLINE,
/// CRITEX_PROMPTS_DIR) to an existing config.
void apply_env(RunConfig& config);

/// Run manifest: resolved config, inputs and outputs; timestamps live in
/// a separate field so scripted reruns stay byte-identical elsewhere.
nlohmann::ordered_json make_manifest(const RunConfig& config,
                                     const std::vector<std::string>& inputs,
                                     const std::vector<std::string>& outputs);

}  // namespace critex::config
