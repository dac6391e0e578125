#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critex/backend.hpp"
#include "critex/celex.hpp"
#include "critex/config.hpp"
#include "critex/enrich.hpp"
#include "critex/ingest.hpp"
#include "critex/prompts.hpp"
#include "critex/stages.hpp"

namespace critex::driver {

/// Backend/registry/prompt wiring resolved from a run configuration.
/// Owns the instances; hand out references for the run's lifetime.
struct Runtime {
    std::unique_ptr<backend::LlmBackend> llm;
    std::unique_ptr<celex::RegistryClient> registry;
    std::unique_ptr<enrich::Fetcher> fetcher;            // null when offline
    std::unique_ptr<enrich::Converter> converter;        // null when unconfigured
    std::unique_ptr<rag::EmbeddingBackend> embeddings;   // null = sparse-only
    prompts::PromptLibrary prompt_library;
};

/// Builds the runtime per config: scripted backend when a transcript is
/// configured, in-memory registry in offline mode, HTTP otherwise.
Runtime make_runtime(const config::RunConfig& config);

struct ExtractionRun {
    stages::ActivityResult activity;
    std::vector<enrich::EnrichmentAudit> audits;
};

/// One activity through the pipeline; enrichment runs inline when the
/// config asks for it.
ExtractionRun run_extraction(const ingest::ActivityDocument& doc, Runtime& runtime,
                             const config::RunConfig& config);

/// Input discovery: every "<slug>.html" with a "<slug>.json" metadata
/// sidecar ({"activity_id", "activity_name", "objective"}).
struct ActivityInput {
    std::filesystem::path html_path;
    ingest::ActivityMeta meta;
};
std::vector<ActivityInput> discover_inputs(const std::filesystem::path& input_dir);

/// Reads the activity HTML from disk; when the file is absent and a
/// fetch base is configured, downloads <base>/<activity_id>.html.
ingest::ActivityDocument load_activity(const ActivityInput& input,
                                       const std::string& fetch_base = "");

}  // namespace critex::driver
