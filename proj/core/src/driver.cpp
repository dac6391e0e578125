#include "critex/driver.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "critex/io.hpp"

namespace critex::driver {

Runtime make_runtime(const config::RunConfig& config) {
    Runtime runtime;
    runtime.prompt_library = config.prompts_dir.empty()
                                 ? prompts::PromptLibrary()
                                 : prompts::PromptLibrary(config.prompts_dir);

    if (!config.transcript_path.empty()) {
        if (!std::filesystem::exists(config.transcript_path)) {
            throw config::ConfigError("scripted mode: transcript not found: " +
                                      config.transcript_path);
        }
        runtime.llm = std::make_unique<backend::ScriptedBackend>(
            backend::Transcript::load(config.transcript_path));
    } else if (!config.backend_url.empty()) {
        runtime.llm = std::make_unique<backend::HttpChatBackend>(
            config.backend_url, config.backend_model, config.backend_api_key,
            config.backend_timeout_seconds);
    } else {
        throw config::ConfigError(
            "no backend configured: set backend_url or transcript_path (scripted mode)");
    }

    if (config.offline || !config.registry_path.empty()) {
        if (config.registry_path.empty()) {
            runtime.registry = std::make_unique<celex::InMemoryRegistry>();
        } else {
            runtime.registry = std::make_unique<celex::InMemoryRegistry>(
                celex::InMemoryRegistry::from_json_file(config.registry_path));
        }
    } else {
        runtime.registry = std::make_unique<celex::HttpRegistry>(config.eurlex_base_url);
    }

    if (!config.offline) {
        runtime.fetcher = std::make_unique<enrich::HttpFetcher>(config.eurlex_base_url);
    }
    if (!config.converter_command.empty()) {
        runtime.converter = std::make_unique<enrich::Converter>(config.converter_command);
    }
    if (!config.embedding_url.empty()) {
        runtime.embeddings = rag::make_http_embedding_backend(config.embedding_url);
    }
    return runtime;
}

ExtractionRun run_extraction(const ingest::ActivityDocument& doc, Runtime& runtime,
                             const config::RunConfig& config) {
    stages::PipelineOptions options;
    options.tau = config.tau;
    options.k_max = config.k_max;
    options.stage_budget = std::chrono::seconds(config.stage_budget_seconds);

    ExtractionRun run;
    run.activity = stages::extract_activity(doc, *runtime.llm, runtime.prompt_library,
                                            *runtime.registry, options);

    if (config.enrich) {
        enrich::EnrichOptions enrich_options;
        enrich_options.offline = config.offline;
        enrich_options.internal_doc_id = config.internal_doc_id;
        enrich_options.bm25 = {config.bm25_k1, config.bm25_b};
        enrich_options.chunking = {config.chunk_budget, config.chunk_overlap};
        enrich_options.refine.confidence_threshold = config.refine_threshold;
        enrich_options.refine.k_rrf = config.rrf_k;
        if (!config.index_dir.empty()) enrich_options.index_dir = config.index_dir;
        enrich::DocumentCache cache{config.cache_dir};
        run.audits = enrich::enrich_tree(
            run.activity.tree.root, doc.activity_name, doc.objective, cache,
            runtime.fetcher.get(), runtime.converter.get(), *runtime.llm,
            runtime.prompt_library, runtime.embeddings.get(), enrich_options);
    }
    run.activity.backend_calls = runtime.llm->call_count();
    return run;
}

std::vector<ActivityInput> discover_inputs(const std::filesystem::path& input_dir) {
    if (!std::filesystem::is_directory(input_dir)) {
        throw config::ConfigError("input directory not found: " + input_dir.string());
    }
    std::vector<ActivityInput> inputs;
    for (const auto& entry : std::filesystem::directory_iterator(input_dir)) {
        // Metadata sidecars drive discovery; the HTML may live on disk or
        // be fetched later from the configured base URL.
        if (entry.path().extension() != ".json") continue;
        auto meta_json = nlohmann::json::parse(io::read_file(entry.path()));
        if (!meta_json.is_object() || !meta_json.contains("activity_id")) continue;
        ActivityInput input;
        input.html_path = entry.path();
        input.html_path.replace_extension(".html");
        input.meta.activity_id = meta_json.at("activity_id").get<std::string>();
        input.meta.activity_name = meta_json.value("activity_name", std::string{});
        input.meta.objective = meta_json.value("objective", std::string{});
        inputs.push_back(std::move(input));
    }
    std::sort(inputs.begin(), inputs.end(),
              [](const ActivityInput& a, const ActivityInput& b) {
                  return a.meta.activity_id < b.meta.activity_id;
              });
    return inputs;
}

ingest::ActivityDocument load_activity(const ActivityInput& input,
                                       const std::string& fetch_base) {
    std::string html;
    if (std::filesystem::exists(input.html_path)) {
        html = io::read_file(input.html_path);
    } else if (!fetch_base.empty()) {
        html = io::http_get(fetch_base + "/" + input.meta.activity_id + ".html");
    } else {
        throw config::ConfigError("activity HTML missing and no fetch base configured: " +
                                  input.html_path.string());
    }
    return ingest::parse_activity_html(html, input.meta);
}

}  // namespace critex::driver
