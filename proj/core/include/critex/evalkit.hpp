#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "critex/backend.hpp"
#include "critex/prompts.hpp"
#include "critex/schema.hpp"

namespace critex::evalkit {

/// Tolerant node view for scoring: field presence matters (schema
/// completeness is one of the four quality features), so trees load
/// leniently rather than through the strict schema parser.
struct EvalNode {
    std::string criterion_id;
    std::string verbatim_text;      // whitespace-normalized
    std::string category;
    std::string applicability;
    std::string evaluation_logic;
    int present_fields = 0;         // of the 13 schema fields
    int parent = -1;                // index into EvalTree::nodes
    std::vector<int> children;
    nlohmann::json raw;
};

struct EvalTree {
    std::vector<EvalNode> nodes;  // preorder; nodes[0] is the root
    static EvalTree load(const nlohmann::json& tree_json);
};

enum class MatchBasis { IdExact, TextSimilarity };

struct AlignedPair {
    int gold = 0;    // index into gold tree
    int system = 0;  // index into system tree
    MatchBasis basis = MatchBasis::IdExact;
    double similarity = 1.0;
    double quality = 0.0;
};

struct Alignment {
    std::vector<AlignedPair> pairs;
    std::vector<int> unmatched_gold;
    std::vector<int> unmatched_system;
};

inline constexpr double kSimilarityFloor = 0.80;

/// Two-pass node alignment: exact criterion_id first, then greedy
/// pairing of the remainder by descending gestalt similarity of
/// verbatim text, accepting >= 0.80, ties by document order.
Alignment align(const EvalTree& gold, const EvalTree& system);

/// Weighted context quality of one matched pair: parent placement 0.30,
/// sibling Jaccard 0.25, subtree shape min/max 0.25 (leaf-leaf scores
/// full), schema completeness (fraction of 13 fields) 0.20.
double context_quality(const AlignedPair& pair, const EvalTree& gold, const EvalTree& system,
                       const Alignment& alignment);

struct F1Report {
    std::vector<AlignedPair> pairs;
    std::vector<std::string> unmatched_gold;
    std::vector<std::string> unmatched_system;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Alignment-weighted structural F1: precision = sum(quality) / (pairs +
/// unmatched system), recall = sum(quality) / (pairs + unmatched gold),
/// F1 their harmonic mean (0 when both are 0).
F1Report structural_f1(const EvalTree& gold, const EvalTree& system);

struct ClassificationAccuracies {
    std::optional<double> category;
    std::optional<double> applicability;
    std::optional<double> evaluation_logic;
};

/// Exact-match fractions over aligned pairs; null when nothing aligned.
ClassificationAccuracies classification_accuracies(const EvalTree& gold, const EvalTree& system,
                                                   const Alignment& alignment);

// ---------------------------------------------------------------------
// LLM judges
// ---------------------------------------------------------------------

enum class JudgeDimension {
    Threshold,
    Reference,
    Footnote,
    Dependency,
    Faithfulness,
    Relevance,
    Completeness,
    Coverage,
};

std::string to_string(JudgeDimension d);
bool is_semantic_dimension(JudgeDimension d);  // 0-5 scale vs 1-5 RAG scale

struct JudgeInputs {
    std::string verbatim;   // semantic dimensions
    std::string gold_field;
    std::string system_field;
    std::string criterion;  // RAG dimensions
    std::string chunks;
    std::string summary;
    std::string key_facts;
    std::string thresholds;
};

struct JudgeScore {
    JudgeDimension dimension = JudgeDimension::Threshold;
    int score = 0;
    std::string reason;
};

/// Runs one judge. Semantic dimensions with both fields null/empty score
/// 0 without a backend call; a parse failure retries once and then
/// returns nullopt (excluded from aggregation with a count).
std::optional<JudgeScore> judge(JudgeDimension dimension, const JudgeInputs& inputs,
                                backend::LlmBackend& llm, const prompts::PromptLibrary& lib);

/// Mean over scores > 0 (concordant absence excluded); nullopt when no
/// positive scores exist.
std::optional<double> semantic_mean(const std::vector<int>& scores);

struct JudgeSummary {
    std::map<std::string, double> means;  // dimension -> mean over scores > 0
    std::map<std::string, int> scored;    // scores entering the mean
    std::map<std::string, int> zeros;     // concordant absences (excluded)
    std::map<std::string, int> missing;   // parse failures (excluded, counted)
};

/// Runs the four semantic-equivalence judges (threshold, reference,
/// footnote, dependency) over every aligned pair.
JudgeSummary run_semantic_judges(const EvalTree& gold, const EvalTree& system,
                                 const Alignment& alignment, backend::LlmBackend& llm,
                                 const prompts::PromptLibrary& lib);

// ---------------------------------------------------------------------
// Calibration and stratification
// ---------------------------------------------------------------------

struct CalibrationRecord {
    double confidence = 0;
    int iterations = 1;
    std::map<std::string, double> scores;  // dimension -> score
};

struct BinnedMeans {
    struct Bin {
        double lo = 0, hi = 0;
        int count = 0;
        std::map<std::string, double> means;
    };
    std::vector<Bin> confidence_bins;                 // five equal-width bins over [0, 1]
    std::map<int, std::map<std::string, double>> by_iteration;
    std::map<int, int> iteration_counts;
};

BinnedMeans calibration_report(const std::vector<CalibrationRecord>& records);

/// Runs the four RAG-quality judges over every retrieved enrichment
/// record in the tree. `markdown_for` resolves a document id to its
/// cached markdown (the judged passages are its chunks); `iterations`
/// maps "criterion_id|source" to the refinement loop count for
/// stratification.
std::vector<CalibrationRecord> run_rag_judges(
    const schema::CriterionNode& root,
    const std::function<std::optional<std::string>(const std::string&)>& markdown_for,
    const std::map<std::string, int>& iterations, const std::string& internal_doc_id,
    backend::LlmBackend& llm, const prompts::PromptLibrary& lib);

std::string render_calibration_csv(const BinnedMeans& binned);

/// Plain-text metric table (metric, value, n) for terminal reports.
std::string render_metric_table(const std::vector<std::tuple<std::string, double, int>>& rows);

}  // namespace critex::evalkit
