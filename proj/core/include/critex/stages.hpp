#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "critex/backend.hpp"
#include "critex/celex.hpp"
#include "critex/graph.hpp"
#include "critex/ingest.hpp"
#include "critex/memory.hpp"
#include "critex/odr.hpp"
#include "critex/prompts.hpp"
#include "critex/schema.hpp"
#include "critex/validate.hpp"

namespace critex::stages {

struct StageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mutable working form of one criterion while the stages run. Stage 7
/// assembles drafts into immutable CriterionNodes.
struct NodeDraft {
    std::string id;
    std::string parent;         // hierarchy parent id ("" for ROOT)
    int seq = 0;                // document order key (segment index)
    bool synthetic = false;     // ROOT and group containers
    std::string verbatim;
    std::vector<std::string> footnote_markers;

    schema::EvalLogic logic = schema::EvalLogic::Leaf;
    std::optional<int> n_required;
    std::optional<schema::Threshold> threshold;
    schema::Category category = schema::Category::Qualitative;
    schema::Applicability applicability = schema::Applicability::Mandatory;
    std::vector<schema::Tag> tags;
    std::string rule_summary;
    std::optional<schema::ReferenceSet> references;
    std::optional<schema::Dependencies> dependencies;
    std::vector<std::string> threshold_annotations;  // [THRESHOLD_FROM:...]
    std::vector<std::string> correction_annotations; // [CORR FROM:... TO:...]
    std::vector<schema::Footnote> footnotes;
};

struct EdgeRecord {
    int stage = 0;
    graph::EdgeKind kind = graph::EdgeKind::Hierarchy;
    std::string from;
    std::string to;
    std::string annotation;
};

/// Cumulative extraction state threaded through the seven stages. Stages
/// never mutate earlier stages' fields except through ODR repair.
struct ExtractionState {
    ingest::ActivityDocument doc;
    memory::SharedMemory mem;
    std::map<std::string, NodeDraft> nodes;
    std::vector<EdgeRecord> edge_log;
    std::vector<odr::Issue> pending_issues;  // deterministic issues of the running stage
    std::vector<schema::Violation> violations;
    int backend_calls = 0;

    std::vector<std::string> ids_in_document_order() const;
    NodeDraft& node(const std::string& id);
    bool has_node(const std::string& id) const { return nodes.count(id) > 0; }
};

struct PipelineOptions {
    double tau = 0.7;
    int k_max = 3;
    std::chrono::milliseconds stage_budget{120000};
};

struct ActivityResult {
    schema::ActivityTree tree;
    graph::ValidationReport graph_report;
    std::vector<schema::Violation> schema_violations;
    nlohmann::ordered_json odr_traces = nlohmann::ordered_json::array();
    bool flagged = false;
    int backend_calls = 0;
};

// Individual stages. Each consumes the cumulative state and the source
// document, calls the backend for its semantic decisions, and merges its
// output; `guidance` carries ODR repair hints into the prompts.

/// Stage 1: deterministic skeleton from the segment stream (markers,
/// nesting recovery for flat sibling lists), semantic anchoring of
/// unnumbered paragraphs, chapeau evaluation-logic inference.
nlohmann::ordered_json stage1_structural_parse(ExtractionState& state, backend::LlmBackend& llm,
                                               const prompts::PromptLibrary& lib,
                                               const std::string& guidance = "");

/// Stage 2: quantitative and temporal threshold extraction with verbatim
/// value verification; results registered in shared memory.
nlohmann::ordered_json stage2_extract_thresholds(ExtractionState& state, backend::LlmBackend& llm,
                                                 const prompts::PromptLibrary& lib,
                                                 const std::string& guidance = "");

/// Stage 3: category (deterministic from thresholds), applicability and
/// tags via prompts, semantic pathway detection with group-container
/// synthesis.
nlohmann::ordered_json stage3_classify(ExtractionState& state, backend::LlmBackend& llm,
                                       const prompts::PromptLibrary& lib,
                                       const std::string& guidance = "");

/// Stage 4: reference extraction, CELEX normalization and registry
/// verification; internal criterion mentions are left to stage 5.
nlohmann::ordered_json stage4_extract_references(ExtractionState& state, backend::LlmBackend& llm,
                                                 const prompts::PromptLibrary& lib,
                                                 celex::RegistryClient& registry,
                                                 const std::string& guidance = "");

/// Stage 5: conditional dependencies, threshold inheritance from the
/// registry (with period selectors), cross-reference disambiguation and
/// correction with full provenance.
nlohmann::ordered_json stage5_resolve_dependencies(ExtractionState& state,
                                                   backend::LlmBackend& llm,
                                                   const prompts::PromptLibrary& lib,
                                                   const std::string& guidance = "");

/// Stage 6: footnote decomposition into typed items with CELEX ids,
/// linked to the node carrying the marker.
nlohmann::ordered_json stage6_process_footnotes(ExtractionState& state, backend::LlmBackend& llm,
                                                const prompts::PromptLibrary& lib,
                                                celex::RegistryClient& registry,
                                                const std::string& guidance = "");

/// Stage 7: deterministic assembly — category recomputation, rule
/// summary finalization with bracket annotations, normalization,
/// validation, nested tree construction and graph checks.
ActivityResult stage7_assemble(ExtractionState& state);

/// Runs all seven stages under ODR control.
ActivityResult extract_activity(const ingest::ActivityDocument& doc, backend::LlmBackend& llm,
                                const prompts::PromptLibrary& lib,
                                celex::RegistryClient& registry,
                                const PipelineOptions& options = {});

/// Builds the typed criterion graph for an assembled tree plus the
/// pipeline's edge log (group membership, dependencies, corrections,
/// inheritance).
graph::CriterionGraph build_pipeline_graph(const schema::CriterionNode& root,
                                           const std::string& activity_id,
                                           const std::vector<EdgeRecord>& edge_log);

}  // namespace critex::stages
