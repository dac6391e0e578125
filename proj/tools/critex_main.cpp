// critex - criterion tree extraction for regulatory HTML.
//
// Subcommands: extract, enrich, evaluate, graph, inspect.
// Exit codes: 0 ok, 1 flagged under --strict, 2 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "critex/driver.hpp"
#include "critex/enrich.hpp"
#include "critex/evalkit.hpp"
#include "critex/graph.hpp"
#include "critex/io.hpp"
#include "critex/schema_json.hpp"
#include "critex/text.hpp"

namespace {

namespace fs = std::filesystem;
using namespace critex;
using nlohmann::ordered_json;

struct CommonFlags {
    std::string config_file;
    std::string input_dir;
    std::string output_dir;
    std::string transcript;
    std::string registry;
    std::string cache_dir;
    std::string prompts_dir;
    bool offline = false;
    bool strict = false;
    int parallelism = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "JSON config file");
    cmd->add_option("--input", flags.input_dir, "input directory (html + json metadata pairs)");
    cmd->add_option("--out", flags.output_dir, "output directory");
    cmd->add_option("--transcript", flags.transcript,
                    "scripted-backend transcript (replay mode)");
    cmd->add_option("--registry", flags.registry, "in-memory CELEX registry accept-set JSON");
    cmd->add_option("--cache", flags.cache_dir, "document cache directory");
    cmd->add_option("--prompts", flags.prompts_dir, "prompt template directory override");
    cmd->add_flag("--offline", flags.offline, "no network: cached documents and registry only");
    cmd->add_flag("--strict", flags.strict, "exit 1 when any activity is flagged for review");
    cmd->add_option("--parallelism", flags.parallelism, "worker pool size");
}

config::RunConfig resolve_config(const CommonFlags& flags) {
    config::RunConfig cfg = config::load(
        flags.config_file.empty() ? std::nullopt
                                  : std::optional<fs::path>(flags.config_file));
    // Flags override env and file values.
    if (!flags.input_dir.empty()) cfg.input_dir = flags.input_dir;
    if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
    if (!flags.transcript.empty()) cfg.transcript_path = flags.transcript;
    if (!flags.registry.empty()) cfg.registry_path = flags.registry;
    if (!flags.cache_dir.empty()) cfg.cache_dir = flags.cache_dir;
    if (!flags.prompts_dir.empty()) cfg.prompts_dir = flags.prompts_dir;
    if (flags.offline) cfg.offline = true;
    if (flags.strict) cfg.strict = true;
    if (flags.parallelism > 0) cfg.parallelism = flags.parallelism;
    return cfg;
}

ordered_json violations_json(const std::vector<schema::Violation>& violations) {
    ordered_json out = ordered_json::array();
    for (const auto& v : violations) {
        out.push_back({{"code", v.code},
                       {"criterion_id", v.criterion_id},
                       {"field", v.field},
                       {"message", v.message}});
    }
    return out;
}

ordered_json graph_report_json(const graph::ValidationReport& report) {
    ordered_json out = ordered_json::array();
    for (const auto& v : report.violations) {
        out.push_back({{"code", v.code}, {"locus", v.locus}, {"detail", v.detail}});
    }
    return out;
}

int cmd_extract(const CommonFlags& flags, bool enrich_inline) {
    config::RunConfig cfg = resolve_config(flags);
    cfg.enrich = cfg.enrich || enrich_inline;
    if (cfg.input_dir.empty()) throw config::ConfigError("--input is required");

    auto inputs = driver::discover_inputs(cfg.input_dir);
    if (inputs.empty()) throw config::ConfigError("no activities found in " + cfg.input_dir);

    fs::create_directories(cfg.output_dir);

    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    std::mutex io_mutex;
    bool any_flagged = false;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(inputs.size());

    auto worker = [&]() {
        // Each worker owns its runtime; backend clients are not shared
        // across activities so call counts stay per-thread.
        while (true) {
            std::size_t index = next.fetch_add(1);
            if (index >= inputs.size()) break;
            try {
                driver::Runtime runtime = driver::make_runtime(cfg);
                auto doc = driver::load_activity(inputs[index], cfg.input_fetch_base);
                auto run = driver::run_extraction(doc, runtime, cfg);

                const std::string slug = doc.activity_id;
                io::write_file(fs::path(cfg.output_dir) / (slug + ".json"),
                               schema::activity_to_canonical_json(run.activity.tree));
                std::string trace_lines;
                for (const auto& record : run.activity.odr_traces) {
                    trace_lines += record.dump() + "\n";
                }
                io::write_file(fs::path(cfg.output_dir) / (slug + ".odr.jsonl"), trace_lines);
                ordered_json report;
                report["activity_id"] = slug;
                report["flagged"] = run.activity.flagged;
                report["backend_calls"] = run.activity.backend_calls;
                report["schema_violations"] = violations_json(run.activity.schema_violations);
                report["graph_violations"] = graph_report_json(run.activity.graph_report);
                if (cfg.enrich) {
                    ordered_json audits = ordered_json::array();
                    for (const auto& audit : run.audits) {
                        audits.push_back({{"criterion_id", audit.criterion_id},
                                          {"source", audit.source_label},
                                          {"status", audit.status},
                                          {"iterations", audit.iterations},
                                          {"retrieval_confidence", audit.retrieval_confidence},
                                          {"summary_confidence", audit.summary_confidence}});
                    }
                    report["enrichment"] = audits;
                }
                io::write_file(fs::path(cfg.output_dir) / (slug + ".report.json"),
                               report.dump(2) + "\n");

                std::lock_guard<std::mutex> lock(io_mutex);
                input_names.push_back(inputs[index].html_path.filename().string());
                output_names.push_back(slug + ".json");
                any_flagged = any_flagged || run.activity.flagged;
                std::cerr << "extracted " << slug
                          << (run.activity.flagged ? " [flagged for review]" : "") << "\n";
            } catch (...) {
                errors[index] = std::current_exception();
            }
        }
    };

    const int workers = std::min<int>(cfg.parallelism, static_cast<int>(inputs.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& error : errors) {
        if (error) std::rethrow_exception(error);
    }

    std::sort(input_names.begin(), input_names.end());
    std::sort(output_names.begin(), output_names.end());
    io::write_file(fs::path(cfg.output_dir) / "manifest.json",
                   config::make_manifest(cfg, input_names, output_names).dump(2) + "\n");

    if (any_flagged && cfg.strict) return 1;
    return 0;
}

int cmd_enrich(const CommonFlags& flags, const std::string& trees_dir) {
    config::RunConfig cfg = resolve_config(flags);
    cfg.enrich = true;
    driver::Runtime runtime = driver::make_runtime(cfg);
    fs::create_directories(cfg.output_dir);

    enrich::EnrichOptions options;
    options.offline = cfg.offline;
    options.internal_doc_id = cfg.internal_doc_id;
    options.bm25 = {cfg.bm25_k1, cfg.bm25_b};
    options.chunking = {cfg.chunk_budget, cfg.chunk_overlap};
    options.refine.confidence_threshold = cfg.refine_threshold;
    options.refine.k_rrf = cfg.rrf_k;
    enrich::DocumentCache cache{cfg.cache_dir};

    int retrieved = 0, paywalled = 0, skipped = 0;
    for (const auto& entry : fs::directory_iterator(trees_dir)) {
        if (entry.path().extension() != ".json") continue;
        auto tree = schema::activity_from_canonical_json(io::read_file(entry.path()));
        auto audits = enrich::enrich_tree(tree.root, tree.activity_name, tree.objective, cache,
                                          runtime.fetcher.get(), runtime.converter.get(),
                                          *runtime.llm, runtime.prompt_library,
                                          runtime.embeddings.get(), options);
        for (const auto& audit : audits) {
            if (audit.status == "retrieved") ++retrieved;
            else if (audit.status == "paywalled") ++paywalled;
            else ++skipped;
        }
        io::write_file(fs::path(cfg.output_dir) / entry.path().filename(),
                       schema::activity_to_canonical_json(tree));
        ordered_json audits_json = ordered_json::array();
        for (const auto& audit : audits) {
            audits_json.push_back({{"criterion_id", audit.criterion_id},
                                   {"source", audit.source_label},
                                   {"status", audit.status},
                                   {"iterations", audit.iterations},
                                   {"retrieval_confidence", audit.retrieval_confidence},
                                   {"summary_confidence", audit.summary_confidence}});
        }
        io::write_file(fs::path(cfg.output_dir) /
                           (entry.path().stem().string() + ".enrichment.json"),
                       audits_json.dump(2) + "\n");
    }
    std::cerr << "enrichment statuses: retrieved " << retrieved << ", paywalled " << paywalled
              << ", skipped " << skipped << "\n";
    return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& gold_dir,
                 const std::string& system_dir, bool with_judges) {
    config::RunConfig cfg = resolve_config(flags);
    fs::create_directories(cfg.output_dir);

    std::map<std::string, fs::path> gold_files, system_files;
    for (const auto& entry : fs::directory_iterator(gold_dir)) {
        if (entry.path().extension() == ".json" &&
            entry.path().string().find(".report.") == std::string::npos &&
            entry.path().string().find("manifest") == std::string::npos) {
            gold_files[entry.path().stem().string()] = entry.path();
        }
    }
    for (const auto& entry : fs::directory_iterator(system_dir)) {
        if (entry.path().extension() == ".json" &&
            entry.path().string().find(".report.") == std::string::npos &&
            entry.path().string().find("manifest") == std::string::npos) {
            system_files[entry.path().stem().string()] = entry.path();
        }
    }

    std::vector<std::string> shared;
    std::vector<std::string> mismatched;
    for (const auto& [id, _] : gold_files) {
        if (system_files.count(id)) shared.push_back(id);
        else mismatched.push_back("gold-only: " + id);
    }
    for (const auto& [id, _] : system_files) {
        if (!gold_files.count(id)) mismatched.push_back("system-only: " + id);
    }
    for (const auto& m : mismatched) std::cerr << "id mismatch, skipping " << m << "\n";
    if (shared.empty()) throw config::ConfigError("no shared activity ids between directories");

    double f1_sum = 0, precision_sum = 0, recall_sum = 0;
    double category_sum = 0, applicability_sum = 0, logic_sum = 0;
    int classified = 0;
    ordered_json per_activity = ordered_json::array();

    for (const auto& id : shared) {
        auto gold = evalkit::EvalTree::load(nlohmann::json::parse(io::read_file(gold_files[id])));
        auto system =
            evalkit::EvalTree::load(nlohmann::json::parse(io::read_file(system_files[id])));
        auto report = evalkit::structural_f1(gold, system);
        auto alignment = evalkit::align(gold, system);
        auto accuracies = evalkit::classification_accuracies(gold, system, alignment);

        f1_sum += report.f1;
        precision_sum += report.precision;
        recall_sum += report.recall;
        if (accuracies.category) {
            category_sum += *accuracies.category;
            applicability_sum += *accuracies.applicability;
            logic_sum += *accuracies.evaluation_logic;
            ++classified;
        }
        ordered_json item;
        item["activity_id"] = id;
        item["precision"] = report.precision;
        item["recall"] = report.recall;
        item["f1"] = report.f1;
        item["aligned_pairs"] = report.pairs.size();
        item["unmatched_gold"] = report.unmatched_gold;
        item["unmatched_system"] = report.unmatched_system;
        item["category_accuracy"] =
            accuracies.category ? ordered_json(*accuracies.category) : ordered_json(nullptr);
        item["applicability_accuracy"] = accuracies.applicability
                                             ? ordered_json(*accuracies.applicability)
                                             : ordered_json(nullptr);
        item["evaluation_logic_accuracy"] =
            accuracies.evaluation_logic ? ordered_json(*accuracies.evaluation_logic)
                                        : ordered_json(nullptr);
        per_activity.push_back(item);
    }

    const double n = static_cast<double>(shared.size());
    ordered_json summary;
    summary["activities"] = shared.size();
    summary["structural_f1"] = f1_sum / n;
    summary["precision"] = precision_sum / n;
    summary["recall"] = recall_sum / n;
    if (classified > 0) {
        summary["category_accuracy"] = category_sum / classified;
        summary["applicability_accuracy"] = applicability_sum / classified;
        summary["evaluation_logic_accuracy"] = logic_sum / classified;
    }
    if (with_judges && cfg.transcript_path.empty() && cfg.backend_url.empty() &&
        cfg.judge_backend_url.empty()) {
        std::cerr << "judge scoring requested but no backend configured; judges skipped\n";
        with_judges = false;
    }
    summary["judges"] = with_judges ? "enabled" : "skipped";

    ordered_json out;
    out["summary"] = summary;
    out["per_activity"] = per_activity;

    if (with_judges) {
        // The judge backend may differ from the pipeline backend.
        config::RunConfig judge_cfg = cfg;
        if (!cfg.judge_backend_url.empty()) judge_cfg.backend_url = cfg.judge_backend_url;
        if (!cfg.judge_model.empty()) judge_cfg.backend_model = cfg.judge_model;
        driver::Runtime runtime = driver::make_runtime(judge_cfg);

        // Semantic equivalence over aligned pairs, macro-averaged.
        std::map<std::string, double> dimension_sums;
        std::map<std::string, int> dimension_counts;
        ordered_json judge_per_activity = ordered_json::array();
        for (const auto& id : shared) {
            auto gold =
                evalkit::EvalTree::load(nlohmann::json::parse(io::read_file(gold_files[id])));
            auto system =
                evalkit::EvalTree::load(nlohmann::json::parse(io::read_file(system_files[id])));
            auto alignment = evalkit::align(gold, system);
            auto judge_summary = evalkit::run_semantic_judges(gold, system, alignment,
                                                              *runtime.llm,
                                                              runtime.prompt_library);
            ordered_json item;
            item["activity_id"] = id;
            for (const auto& [dimension, mean] : judge_summary.means) {
                item[dimension] = mean;
                dimension_sums[dimension] += mean;
                ++dimension_counts[dimension];
            }
            for (const auto& [dimension, count] : judge_summary.missing) {
                item[dimension + "_missing"] = count;
            }
            judge_per_activity.push_back(item);
        }
        ordered_json semantic;
        for (const auto& [dimension, total] : dimension_sums) {
            semantic[dimension] = total / dimension_counts[dimension];
        }
        out["semantic_equivalence"] = semantic;
        out["judge_per_activity"] = judge_per_activity;

        // RAG summary quality plus calibration, when enrichment records
        // and the document cache are available.
        enrich::DocumentCache cache{cfg.cache_dir};
        std::vector<evalkit::CalibrationRecord> calibration;
        for (const auto& id : shared) {
            auto tree = schema::activity_from_canonical_json(io::read_file(system_files[id]));
            std::map<std::string, int> iterations;
            auto sidecar = system_files[id].parent_path() / (id + ".enrichment.json");
            if (fs::exists(sidecar)) {
                for (const auto& audit : nlohmann::json::parse(io::read_file(sidecar))) {
                    iterations[audit.value("criterion_id", std::string{}) + "|" +
                               audit.value("source", std::string{})] =
                        audit.value("iterations", 1);
                }
            }
            auto records = evalkit::run_rag_judges(
                tree.root,
                [&](const std::string& doc_id) { return cache.cached_markdown(doc_id); },
                iterations, cfg.internal_doc_id, *runtime.llm, runtime.prompt_library);
            calibration.insert(calibration.end(), records.begin(), records.end());
        }
        if (!calibration.empty()) {
            auto binned = evalkit::calibration_report(calibration);
            ordered_json rag_quality;
            std::map<std::string, double> sums;
            std::map<std::string, int> counts;
            for (const auto& record : calibration) {
                for (const auto& [dimension, score] : record.scores) {
                    sums[dimension] += score;
                    ++counts[dimension];
                }
            }
            for (const auto& [dimension, total] : sums) {
                rag_quality[dimension] = total / counts[dimension];
            }
            out["rag_quality"] = rag_quality;
            ordered_json by_iteration = ordered_json::object();
            for (const auto& [iteration, means] : binned.by_iteration) {
                ordered_json row;
                row["count"] = binned.iteration_counts.at(iteration);
                for (const auto& [dimension, mean] : means) row[dimension] = mean;
                by_iteration[std::to_string(iteration)] = row;
            }
            out["by_iteration"] = by_iteration;
            io::write_file(fs::path(cfg.output_dir) / "calibration.csv",
                           evalkit::render_calibration_csv(binned));
        }
    }

    io::write_file(fs::path(cfg.output_dir) / "evaluation.json", out.dump(2) + "\n");

    std::vector<std::tuple<std::string, double, int>> table_rows;
    table_rows.emplace_back("Structural F1", summary["structural_f1"].get<double>(),
                            static_cast<int>(shared.size()));
    if (classified > 0) {
        table_rows.emplace_back("Category Accuracy", summary["category_accuracy"].get<double>(),
                                classified);
        table_rows.emplace_back("Applicability Accuracy",
                                summary["applicability_accuracy"].get<double>(), classified);
        table_rows.emplace_back("Evaluation Logic Accuracy",
                                summary["evaluation_logic_accuracy"].get<double>(), classified);
    }
    if (out.contains("semantic_equivalence")) {
        for (const auto& [dimension, mean] : out["semantic_equivalence"].items()) {
            table_rows.emplace_back("Judge: " + dimension, mean.get<double>(),
                                    static_cast<int>(shared.size()));
        }
    }
    if (out.contains("rag_quality")) {
        for (const auto& [dimension, mean] : out["rag_quality"].items()) {
            table_rows.emplace_back("RAG: " + dimension, mean.get<double>(), 0);
        }
    }
    std::cout << evalkit::render_metric_table(table_rows);
    return 0;
}

int cmd_graph(const CommonFlags& flags, const std::string& tree_file, bool strict_violations) {
    config::RunConfig cfg = resolve_config(flags);
    fs::create_directories(cfg.output_dir);
    auto tree = schema::activity_from_canonical_json(io::read_file(tree_file));

    graph::CriterionGraph g = graph::build_graph_from_tree(tree.root, tree.activity_id);
    graph::reposition_misnested(g);
    auto report = graph::validate(g);

    io::write_file(fs::path(cfg.output_dir) / (tree.activity_id + ".dot"), graph::to_dot(g));
    ordered_json report_json;
    report_json["activity_id"] = tree.activity_id;
    report_json["violations"] = graph_report_json(report);
    io::write_file(fs::path(cfg.output_dir) / (tree.activity_id + ".graph.json"),
                   report_json.dump(2) + "\n");

    std::cout << "vertices: " << g.vertices().size() << ", edges: " << g.edges().size()
              << ", violations: " << report.violations.size() << "\n";
    for (const auto& v : report.violations) {
        std::cout << "  " << v.code << " @ " << v.locus << ": " << v.detail << "\n";
    }
    if (strict_violations && !report.clean()) return 1;
    return 0;
}

int cmd_inspect(const CommonFlags& flags, const std::string& html_file, bool dump_segments) {
    config::RunConfig cfg = resolve_config(flags);
    (void)cfg;
    ingest::ActivityMeta meta;
    meta.activity_id = fs::path(html_file).stem().string();
    auto doc = ingest::parse_activity_html(io::read_file(html_file), meta);
    ordered_json out;
    out["activity_id"] = doc.activity_id;
    ordered_json segments = ordered_json::array();
    for (const auto& segment : doc.segments) {
        ordered_json s;
        s["kind"] = ingest::to_string(segment.kind);
        s["depth_hint"] = segment.depth_hint;
        s["marker"] = segment.marker;
        s["text"] = segment.text;
        s["footnote_markers"] = segment.footnote_markers;
        segments.push_back(s);
    }
    out["segments"] = segments;
    ordered_json footnotes = ordered_json::array();
    for (const auto& blob : doc.footnotes) {
        footnotes.push_back({{"id", blob.footnote_id}, {"verbatim", blob.verbatim}});
    }
    out["footnotes"] = footnotes;
    ordered_json unresolved = ordered_json::array();
    for (const auto& u : doc.unresolved_markers) {
        unresolved.push_back({{"segment", u.segment_index}, {"footnote_id", u.footnote_id}});
    }
    out["unresolved_markers"] = unresolved;
    if (dump_segments) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "segments: " << doc.segments.size() << ", footnotes: " << doc.footnotes.size()
                  << ", unresolved markers: " << doc.unresolved_markers.size() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"criterion tree extraction for regulatory HTML"};
    app.require_subcommand(1);

    CommonFlags flags;
    bool enrich_inline = false;
    std::string trees_dir, gold_dir, system_dir, tree_file, html_file;
    bool with_judges = false;
    bool graph_strict = false;
    bool dump_segments = false;

    auto* extract = app.add_subcommand("extract", "run the seven-stage extraction pipeline");
    add_common(extract, flags);
    extract->add_flag("--enrich", enrich_inline, "resolve must_be_fetched references inline");

    auto* enrich_cmd = app.add_subcommand("enrich", "enrich existing activity trees");
    add_common(enrich_cmd, flags);
    enrich_cmd->add_option("--trees", trees_dir, "directory of activity tree JSON files")
        ->required();

    auto* evaluate = app.add_subcommand("evaluate", "score system trees against gold trees");
    add_common(evaluate, flags);
    evaluate->add_option("--gold", gold_dir, "gold tree directory")->required();
    evaluate->add_option("--system", system_dir, "system tree directory")->required();
    evaluate->add_flag("--judge", with_judges, "run LLM-judge scoring (needs a backend)");

    auto* graph_cmd = app.add_subcommand("graph", "validate a tree and dump its typed graph");
    add_common(graph_cmd, flags);
    graph_cmd->add_option("--tree", tree_file, "activity tree JSON file")->required();
    graph_cmd->add_flag("--fail-on-violations", graph_strict,
                        "exit 1 when the validation report is not clean");

    auto* inspect = app.add_subcommand("inspect", "debug-dump the ingest segment stream");
    add_common(inspect, flags);
    inspect->add_option("--html", html_file, "activity HTML file")->required();
    inspect->add_flag("--segments", dump_segments, "print the full segment dump as JSON");

    try {
        app.parse(argc, argv);
        if (extract->parsed()) return cmd_extract(flags, enrich_inline);
        if (enrich_cmd->parsed()) return cmd_enrich(flags, trees_dir);
        if (evaluate->parsed()) return cmd_evaluate(flags, gold_dir, system_dir, with_judges);
        if (graph_cmd->parsed()) return cmd_graph(flags, tree_file, graph_strict);
        if (inspect->parsed()) return cmd_inspect(flags, html_file, dump_segments);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
