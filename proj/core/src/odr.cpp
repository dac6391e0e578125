#include "critex/odr.hpp"

#include <algorithm>
#include <map>

namespace critex::odr {

namespace {

using nlohmann::json;

std::vector<std::pair<std::string, std::string>> issue_multiset(const std::vector<Issue>& issues) {
    std::vector<std::pair<std::string, std::string>> keys;
    keys.reserve(issues.size());
    for (const auto& issue : issues) keys.emplace_back(to_string(issue.kind), issue.field);
    std::sort(keys.begin(), keys.end());
    return keys;
}

bool has_critical(const std::vector<Issue>& issues) {
    return std::any_of(issues.begin(), issues.end(),
                       [](const Issue& i) { return i.severity == Severity::Critical; });
}

}  // namespace

std::string to_string(IssueKind k) {
    switch (k) {
        case IssueKind::Structural: return "Structural";
        case IssueKind::Semantic: return "Semantic";
        case IssueKind::Completeness: return "Completeness";
        case IssueKind::Consistency: return "Consistency";
    }
    return {};
}

std::string to_string(Severity s) {
    switch (s) {
        case Severity::Critical: return "critical";
        case Severity::Major: return "major";
        case Severity::Minor: return "minor";
    }
    return {};
}

IssueKind issue_kind_from_string(const std::string& s) {
    if (s == "Structural") return IssueKind::Structural;
    if (s == "Semantic") return IssueKind::Semantic;
    if (s == "Completeness") return IssueKind::Completeness;
    if (s == "Consistency") return IssueKind::Consistency;
    throw std::invalid_argument("unknown issue kind: " + s);
}

Severity severity_from_string(const std::string& s) {
    if (s == "critical") return Severity::Critical;
    if (s == "major") return Severity::Major;
    if (s == "minor") return Severity::Minor;
    throw std::invalid_argument("unknown severity: " + s);
}

std::string to_string(Action a) {
    switch (a) {
        case Action::RetryModified: return "retry_modified";
        case Action::Decompose: return "decompose";
        case Action::Fallback: return "fallback";
        case Action::Accept: return "accept";
        case Action::Escalate: return "escalate";
    }
    return {};
}

Action action_from_string(const std::string& s) {
    if (s == "retry_modified") return Action::RetryModified;
    if (s == "decompose") return Action::Decompose;
    if (s == "fallback") return Action::Fallback;
    if (s == "accept") return Action::Accept;
    if (s == "escalate") return Action::Escalate;
    throw std::invalid_argument("unknown diagnosis action: " + s);
}

double confidence(const std::vector<Issue>& issues) {
    double score = 1.0;
    for (const auto& issue : issues) {
        switch (issue.severity) {
            case Severity::Critical: score -= kPenaltyCritical; break;
            case Severity::Major: score -= kPenaltyMajor; break;
            case Severity::Minor: score -= kPenaltyMinor; break;
        }
    }
    return std::clamp(score, 0.0, 1.0);
}

nlohmann::ordered_json issue_to_json(const Issue& issue) {
    return nlohmann::ordered_json{{"type", to_string(issue.kind)},
                                  {"severity", to_string(issue.severity)},
                                  {"field", issue.field},
                                  {"description", issue.description},
                                  {"source_evidence", issue.source_evidence}};
}

Issue issue_from_json(const json& j) {
    Issue issue;
    issue.kind = issue_kind_from_string(j.at("type").get<std::string>());
    issue.severity = severity_from_string(j.at("severity").get<std::string>());
    issue.field = j.value("field", std::string{});
    issue.description = j.value("description", std::string{});
    issue.source_evidence = j.value("source_evidence", std::string{});
    return issue;
}

std::vector<Issue> observe(const json& output, const std::string& source_text,
                           const std::vector<Issue>& deterministic,
                           backend::LlmBackend& llm, const prompts::PromptLibrary& lib) {
    std::vector<Issue> merged = deterministic;
    try {
        backend::CompletionRequest request;
        request.system = lib.render("odr_observe_system", {});
        request.user = lib.render("odr_observe",
                                  {{"html", source_text}, {"output", output.dump(2)}});
        json reply = backend::complete_json(llm, request);
        for (const auto& item : reply.value("issues", json::array())) {
            merged.push_back(issue_from_json(item));
        }
    } catch (const std::exception& e) {
        merged.push_back(Issue{IssueKind::Structural, Severity::Critical, "observation",
                               std::string("observation failure: ") + e.what(), ""});
    }
    // Deduplicate by (kind, field); highest severity wins.
    std::map<std::pair<std::string, std::string>, Issue> dedup;
    for (const auto& issue : merged) {
        auto key = std::make_pair(to_string(issue.kind), issue.field);
        auto it = dedup.find(key);
        if (it == dedup.end() ||
            static_cast<int>(issue.severity) < static_cast<int>(it->second.severity)) {
            dedup[key] = issue;
        }
    }
    std::vector<Issue> out;
    out.reserve(dedup.size());
    for (auto& [_, issue] : dedup) out.push_back(issue);
    return out;
}

namespace {

struct RepairReply {
    Diagnosis diagnosis;
    json inline_output;  // null unless the repair carries a corrected payload
};

RepairReply ask_repair(backend::LlmBackend& llm, const prompts::PromptLibrary& lib,
                       const json& output, const std::vector<Issue>& issues,
                       const std::vector<IterationRecord>& history) {
    nlohmann::ordered_json issues_json = nlohmann::ordered_json::array();
    for (const auto& issue : issues) issues_json.push_back(issue_to_json(issue));
    json history_json = json::array();
    for (const auto& record : history) {
        json item;
        item["iteration"] = record.iteration;
        item["confidence"] = record.confidence;
        item["issue_count"] = record.issues.size();
        history_json.push_back(item);
    }
    backend::CompletionRequest request;
    request.system = lib.render("odr_repair_system", {});
    request.user = lib.render("odr_repair", {{"issues", issues_json.dump(2)},
                                             {"output", output.dump(2)},
                                             {"history", history_json.dump(2)}});
    json reply = backend::complete_json(llm, request);

    RepairReply out;
    const json& diag = reply.at("diagnosis");
    out.diagnosis.root_cause = diag.value("root_cause", std::string{});
    for (const auto& f : diag.value("contributing_factors", json::array())) {
        out.diagnosis.contributing_factors.push_back(f.get<std::string>());
    }
    out.diagnosis.recommended_action =
        action_from_string(diag.at("recommended_action").get<std::string>());
    if (diag.contains("specific_guidance")) {
        out.diagnosis.specific_guidance = diag.at("specific_guidance").is_string()
                                              ? diag.at("specific_guidance").get<std::string>()
                                              : diag.at("specific_guidance").dump();
    }
    out.inline_output = reply.value("output", json());
    return out;
}

}  // namespace

LoopResult run_loop(StageUnit& stage, backend::LlmBackend& llm,
                    const prompts::PromptLibrary& lib, const LoopOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    LoopResult result;
    OdrState& state = result.state;

    json attempt = stage.run();
    json best_output = attempt;

    std::vector<std::pair<std::string, std::string>> previous_keys;
    bool have_previous = false;

    for (int iteration = 1; iteration <= options.k_max; ++iteration) {
        state.iteration = iteration;
        std::vector<Issue> deterministic = stage.pre_check ? stage.pre_check(attempt)
                                                           : std::vector<Issue>{};
        std::vector<Issue> issues = observe(attempt, stage.source_text, deterministic, llm, lib);
        const double score = confidence(issues);

        IterationRecord record;
        record.iteration = iteration;
        record.issues = issues;
        record.confidence = score;
        state.history.push_back(record);

        if (score > state.best_confidence) {
            state.best_confidence = score;
            state.best_issues = issues;
            best_output = attempt;
        }

        if (score >= options.tau && !has_critical(issues)) {
            state.termination = "success";
            break;
        }
        auto keys = issue_multiset(issues);
        if (have_previous && keys == previous_keys) {
            state.termination = "repeat";
            break;
        }
        previous_keys = std::move(keys);
        have_previous = true;
        if (iteration == options.k_max) {
            state.termination = "iteration_budget";
            break;
        }
        if (std::chrono::steady_clock::now() - start > options.wall_clock_budget) {
            state.termination = "timeout";
            break;
        }

        RepairReply repair = ask_repair(llm, lib, attempt, issues, state.history);
        state.history.back().action = repair.diagnosis.recommended_action;
        switch (repair.diagnosis.recommended_action) {
            case Action::Accept:
                state.termination = "accepted";
                break;
            case Action::Escalate:
                state.termination = "escalated";
                state.flag_for_review = true;
                break;
            case Action::Fallback:
                attempt = stage.fallback ? stage.fallback() : best_output;
                continue;
            case Action::RetryModified:
            case Action::Decompose:
                attempt = stage.rerun ? stage.rerun(repair.diagnosis, repair.inline_output)
                                      : repair.inline_output;
                continue;
        }
        break;
    }

    if (state.termination.empty()) state.termination = "iteration_budget";
    result.output = best_output;
    if (has_critical(state.best_issues)) state.flag_for_review = true;
    return result;
}

nlohmann::ordered_json trace_to_json(const std::string& stage, const OdrState& state) {
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& record : state.history) {
        nlohmann::ordered_json issues = nlohmann::ordered_json::array();
        for (const auto& issue : record.issues) issues.push_back(issue_to_json(issue));
        nlohmann::ordered_json item;
        item["stage"] = stage;
        item["iteration"] = record.iteration;
        item["issues"] = issues;
        item["confidence"] = record.confidence;
        item["action"] = record.action ? nlohmann::ordered_json(to_string(*record.action))
                                       : nlohmann::ordered_json(nullptr);
        records.push_back(item);
    }
    return records;
}

}  // namespace critex::odr
