#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "critex/backend.hpp"
#include "critex/prompts.hpp"

namespace critex::odr {

enum class IssueKind { Structural, Semantic, Completeness, Consistency };
enum class Severity { Critical, Major, Minor };

std::string to_string(IssueKind k);
std::string to_string(Severity s);
IssueKind issue_kind_from_string(const std::string& s);
Severity severity_from_string(const std::string& s);

struct Issue {
    IssueKind kind = IssueKind::Structural;
    Severity severity = Severity::Major;
    std::string field;
    std::string description;
    std::string source_evidence;
    bool operator==(const Issue&) const = default;
};

enum class Action { RetryModified, Decompose, Fallback, Accept, Escalate };

std::string to_string(Action a);
Action action_from_string(const std::string& s);

struct Diagnosis {
    std::string root_cause;
    std::vector<std::string> contributing_factors;
    Action recommended_action = Action::RetryModified;
    std::string specific_guidance;
};

struct IterationRecord {
    int iteration = 0;
    std::vector<Issue> issues;
    double confidence = 0;
    std::optional<Action> action;
};

struct OdrState {
    int iteration = 0;
    double best_confidence = -1;
    std::vector<Issue> best_issues;
    std::vector<IterationRecord> history;
    bool flag_for_review = false;
    std::string termination;  // success | repeat | iteration_budget | timeout | escalated | accepted
};

/// Penalty confidence model: base 1.0, deduct 0.30 per critical, 0.15
/// per major, 0.05 per minor, clamped to [0, 1]. A single critical issue
/// therefore lands below the default tau of 0.7.
double confidence(const std::vector<Issue>& issues);

inline constexpr double kPenaltyCritical = 0.30;
inline constexpr double kPenaltyMajor = 0.15;
inline constexpr double kPenaltyMinor = 0.05;

/// One stage under ODR control. `run` performs the initial extraction;
/// `rerun` re-extracts with repair guidance (or applies an inline
/// corrected payload); `fallback` reverts to the deterministic pre-check
/// output; `pre_check` contributes deterministic issues merged with the
/// backend observation.
struct StageUnit {
    std::string name;
    std::function<nlohmann::json()> run;
    std::function<nlohmann::json(const Diagnosis&, const nlohmann::json& inline_output)> rerun;
    std::function<nlohmann::json()> fallback;
    std::function<std::vector<Issue>(const nlohmann::json& output)> pre_check;
    /// Source text the observe step grounds against.
    std::string source_text;
};

struct LoopOptions {
    double tau = 0.7;
    int k_max = 3;
    std::chrono::milliseconds wall_clock_budget{120000};
};

struct LoopResult {
    nlohmann::json output;
    OdrState state;
};

/// Compares stage output against the source document: deterministic
/// pre-checks merged with backend-reported issues, deduplicated by
/// (kind, field). An observation failure counts as a critical
/// structural issue.
std::vector<Issue> observe(const nlohmann::json& output, const std::string& source_text,
                           const std::vector<Issue>& deterministic,
                           backend::LlmBackend& llm, const prompts::PromptLibrary& lib);

/// Runs the Observe-Diagnose-Repair loop. Terminates on confidence >= tau
/// with no critical issues, on a repeated issue multiset, at k_max
/// iterations or on timeout, returning the highest-confidence checkpoint.
/// flag_for_review is set iff the returned checkpoint retains a critical
/// issue. Backend calls: one initial run plus at most one observe and one
/// repair per iteration (2*k_max + 1 for single-call stages).
LoopResult run_loop(StageUnit& stage, backend::LlmBackend& llm,
                    const prompts::PromptLibrary& lib, const LoopOptions& options = {});

nlohmann::ordered_json issue_to_json(const Issue& issue);
Issue issue_from_json(const nlohmann::json& j);
nlohmann::ordered_json trace_to_json(const std::string& stage, const OdrState& state);

}  // namespace critex::odr
