#include "critex/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "critex/rag.hpp"
#include "critex/text.hpp"

namespace critex::evalkit {

namespace {

using nlohmann::json;

const char* kSchemaFields[] = {"criterion_id", "category",     "applicability",    "tags",
                               "verbatim_text", "rule_summary", "evaluation_logic", "n_required",
                               "threshold",     "references",   "dependencies",     "sub_criteria",
                               "footnotes"};

void load_into(const json& node_json, int parent, EvalTree& tree) {
    EvalNode node;
    node.parent = parent;
    node.raw = node_json;
    if (node_json.is_object()) {
        node.criterion_id = node_json.value("criterion_id", std::string{});
        if (node_json.contains("verbatim_text") && node_json.at("verbatim_text").is_string()) {
            node.verbatim_text = text::normalize_ws(node_json.at("verbatim_text").get<std::string>());
        }
        node.category = node_json.value("category", std::string{});
        node.applicability = node_json.value("applicability", std::string{});
        node.evaluation_logic = node_json.value("evaluation_logic", std::string{});
        for (const char* field : kSchemaFields) {
            if (node_json.contains(field)) ++node.present_fields;
        }
    }
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(std::move(node));
    if (parent >= 0) tree.nodes[static_cast<std::size_t>(parent)].children.push_back(index);
    if (node_json.is_object() && node_json.contains("sub_criteria") &&
        node_json.at("sub_criteria").is_array()) {
        for (const auto& child : node_json.at("sub_criteria")) load_into(child, index, tree);
    }
}

}  // namespace

EvalTree EvalTree::load(const json& tree_json) {
    EvalTree tree;
    const json& root = tree_json.is_object() && tree_json.contains("tree") &&
                               tree_json.contains("schema_version")
                           ? tree_json.at("tree")
                           : tree_json;
    load_into(root, -1, tree);
    return tree;
}

Alignment align(const EvalTree& gold, const EvalTree& system) {
    Alignment out;
    std::vector<bool> gold_used(gold.nodes.size(), false);
    std::vector<bool> system_used(system.nodes.size(), false);

    // Pass 1: exact criterion_id matching, document order.
    std::map<std::string, std::vector<int>> system_by_id;
    for (int i = 0; i < static_cast<int>(system.nodes.size()); ++i) {
        const auto& id = system.nodes[static_cast<std::size_t>(i)].criterion_id;
        if (!id.empty()) system_by_id[id].push_back(i);
    }
    for (int g = 0; g < static_cast<int>(gold.nodes.size()); ++g) {
        const auto& id = gold.nodes[static_cast<std::size_t>(g)].criterion_id;
        if (id.empty()) continue;
        auto it = system_by_id.find(id);
        if (it == system_by_id.end()) continue;
        for (int s : it->second) {
            if (system_used[static_cast<std::size_t>(s)]) continue;
            out.pairs.push_back(AlignedPair{g, s, MatchBasis::IdExact, 1.0, 0.0});
            gold_used[static_cast<std::size_t>(g)] = true;
            system_used[static_cast<std::size_t>(s)] = true;
            break;
        }
    }

    // Pass 2: greedy text pairing of the remainder, similarity descending,
    // ties by (gold document order, system document order).
    struct Candidate {
        double similarity;
        int gold;
        int system;
    };
    std::vector<Candidate> candidates;
    for (int g = 0; g < static_cast<int>(gold.nodes.size()); ++g) {
        if (gold_used[static_cast<std::size_t>(g)]) continue;
        for (int s = 0; s < static_cast<int>(system.nodes.size()); ++s) {
            if (system_used[static_cast<std::size_t>(s)]) continue;
            double ratio = text::gestalt_ratio(gold.nodes[static_cast<std::size_t>(g)].verbatim_text,
                                               system.nodes[static_cast<std::size_t>(s)].verbatim_text);
            if (ratio >= kSimilarityFloor) candidates.push_back({ratio, g, s});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.gold != b.gold) return a.gold < b.gold;
        return a.system < b.system;
    });
    for (const auto& c : candidates) {
        if (gold_used[static_cast<std::size_t>(c.gold)] ||
            system_used[static_cast<std::size_t>(c.system)]) {
            continue;
        }
        out.pairs.push_back(AlignedPair{c.gold, c.system, MatchBasis::TextSimilarity, c.similarity, 0.0});
        gold_used[static_cast<std::size_t>(c.gold)] = true;
        system_used[static_cast<std::size_t>(c.system)] = true;
    }

    for (int g = 0; g < static_cast<int>(gold.nodes.size()); ++g) {
        if (!gold_used[static_cast<std::size_t>(g)]) out.unmatched_gold.push_back(g);
    }
    for (int s = 0; s < static_cast<int>(system.nodes.size()); ++s) {
        if (!system_used[static_cast<std::size_t>(s)]) out.unmatched_system.push_back(s);
    }
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const AlignedPair& a, const AlignedPair& b) { return a.gold < b.gold; });
    return out;
}

double context_quality(const AlignedPair& pair, const EvalTree& gold, const EvalTree& system,
                       const Alignment&) {
    const EvalNode& g = gold.nodes[static_cast<std::size_t>(pair.gold)];
    const EvalNode& s = system.nodes[static_cast<std::size_t>(pair.system)];

    // Parent placement: same parent criterion_id; two roots count as placed.
    double parent_score = 0;
    if (g.parent < 0 && s.parent < 0) {
        parent_score = 1;
    } else if (g.parent >= 0 && s.parent >= 0) {
        parent_score = gold.nodes[static_cast<std::size_t>(g.parent)].criterion_id ==
                               system.nodes[static_cast<std::size_t>(s.parent)].criterion_id
                           ? 1
                           : 0;
    }

    // Sibling overlap: Jaccard over sibling id sets (self excluded).
    std::set<std::string> gold_siblings;
    if (g.parent >= 0) {
        for (int sibling : gold.nodes[static_cast<std::size_t>(g.parent)].children) {
            if (sibling != pair.gold) {
                gold_siblings.insert(gold.nodes[static_cast<std::size_t>(sibling)].criterion_id);
            }
        }
    }
    std::set<std::string> system_siblings;
    if (s.parent >= 0) {
        for (int sibling : system.nodes[static_cast<std::size_t>(s.parent)].children) {
            if (sibling != pair.system) {
                system_siblings.insert(system.nodes[static_cast<std::size_t>(sibling)].criterion_id);
            }
        }
    }
    double sibling_score = 1;
    if (!gold_siblings.empty() || !system_siblings.empty()) {
        std::vector<std::string> intersection;
        std::set_intersection(gold_siblings.begin(), gold_siblings.end(), system_siblings.begin(),
                              system_siblings.end(), std::back_inserter(intersection));
        std::set<std::string> all = gold_siblings;
        all.insert(system_siblings.begin(), system_siblings.end());
        sibling_score = static_cast<double>(intersection.size()) / static_cast<double>(all.size());
    }

    // Subtree shape: min/max of child counts; leaf matched to leaf is full.
    const auto gold_children = g.children.size();
    const auto system_children = s.children.size();
    double shape_score = 1;
    if (gold_children != 0 || system_children != 0) {
        shape_score = static_cast<double>(std::min(gold_children, system_children)) /
                      static_cast<double>(std::max(gold_children, system_children));
    }

    const double completeness = static_cast<double>(s.present_fields) / 13.0;

    return 0.30 * parent_score + 0.25 * sibling_score + 0.25 * shape_score + 0.20 * completeness;
}

F1Report structural_f1(const EvalTree& gold, const EvalTree& system) {
    F1Report report;
    Alignment alignment = align(gold, system);
    double weighted = 0;
    for (auto& pair : alignment.pairs) {
        pair.quality = context_quality(pair, gold, system, alignment);
        weighted += pair.quality;
    }
    report.pairs = alignment.pairs;
    for (int g : alignment.unmatched_gold) {
        report.unmatched_gold.push_back(gold.nodes[static_cast<std::size_t>(g)].criterion_id);
    }
    for (int s : alignment.unmatched_system) {
        report.unmatched_system.push_back(system.nodes[static_cast<std::size_t>(s)].criterion_id);
    }
    const double system_total =
        static_cast<double>(alignment.pairs.size() + alignment.unmatched_system.size());
    const double gold_total =
        static_cast<double>(alignment.pairs.size() + alignment.unmatched_gold.size());
    report.precision = system_total > 0 ? weighted / system_total : 0;
    report.recall = gold_total > 0 ? weighted / gold_total : 0;
    report.f1 = (report.precision + report.recall) > 0
                    ? 2 * report.precision * report.recall / (report.precision + report.recall)
                    : 0;
    return report;
}

ClassificationAccuracies classification_accuracies(const EvalTree& gold, const EvalTree& system,
                                                   const Alignment& alignment) {
    ClassificationAccuracies out;
    if (alignment.pairs.empty()) return out;
    int category_hits = 0;
    int applicability_hits = 0;
    int logic_hits = 0;
    for (const auto& pair : alignment.pairs) {
        const EvalNode& g = gold.nodes[static_cast<std::size_t>(pair.gold)];
        const EvalNode& s = system.nodes[static_cast<std::size_t>(pair.system)];
        if (g.category == s.category) ++category_hits;
        if (g.applicability == s.applicability) ++applicability_hits;
        if (g.evaluation_logic == s.evaluation_logic) ++logic_hits;
    }
    const double n = static_cast<double>(alignment.pairs.size());
    out.category = category_hits / n;
    out.applicability = applicability_hits / n;
    out.evaluation_logic = logic_hits / n;
    return out;
}

std::string to_string(JudgeDimension d) {
    switch (d) {
        case JudgeDimension::Threshold: return "threshold";
        case JudgeDimension::Reference: return "reference";
        case JudgeDimension::Footnote: return "footnote";
        case JudgeDimension::Dependency: return "dependency";
        case JudgeDimension::Faithfulness: return "faithfulness";
        case JudgeDimension::Relevance: return "relevance";
        case JudgeDimension::Completeness: return "completeness";
        case JudgeDimension::Coverage: return "coverage";
    }
    return {};
}

bool is_semantic_dimension(JudgeDimension d) {
    return d == JudgeDimension::Threshold || d == JudgeDimension::Reference ||
           d == JudgeDimension::Footnote || d == JudgeDimension::Dependency;
}

namespace {

bool field_empty(const std::string& s) {
    std::string t = text::normalize_ws(s);
    return t.empty() || t == "null" || t == "[]" || t == "{}";
}

}  // namespace

std::optional<JudgeScore> judge(JudgeDimension dimension, const JudgeInputs& inputs,
                                backend::LlmBackend& llm, const prompts::PromptLibrary& lib) {
    JudgeScore score;
    score.dimension = dimension;

    if (is_semantic_dimension(dimension) && field_empty(inputs.gold_field) &&
        field_empty(inputs.system_field)) {
        // Concordant absence: automatically 0 without an LLM call.
        score.score = 0;
        score.reason = "concordant absence";
        return score;
    }

    const std::string template_name = "judge_" + to_string(dimension);
    std::map<std::string, std::string> vars;
    if (is_semantic_dimension(dimension)) {
        vars = {{"verbatim", inputs.verbatim},
                {"gold", inputs.gold_field},
                {"system", inputs.system_field}};
    } else {
        vars = {{"criterion_text", inputs.criterion},
                {"chunk_texts", inputs.chunks},
                {"summary_text", inputs.summary},
                {"key_facts", inputs.key_facts},
                {"thresholds", inputs.thresholds}};
    }

    backend::CompletionRequest request;
    request.system = lib.render("judge_system", {});
    request.user = lib.render(template_name, vars);
    request.max_tokens = is_semantic_dimension(dimension) ? 150 : 200;

    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            json reply = json::parse(llm.complete(request), nullptr, false);
            if (reply.is_discarded() || !reply.contains("score")) continue;
            int value = reply.at("score").get<int>();
            const int lo = is_semantic_dimension(dimension) ? 0 : 1;
            if (value < lo || value > 5) continue;
            score.score = value;
            score.reason = reply.value("reason", std::string{});
            return score;
        } catch (const std::exception&) {
            // retry once, then report missing
        }
    }
    return std::nullopt;
}

std::optional<double> semantic_mean(const std::vector<int>& scores) {
    double total = 0;
    int count = 0;
    for (int s : scores) {
        if (s > 0) {
            total += s;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return total / count;
}

namespace {

std::string field_dump(const json& node, const char* field) {
    if (!node.is_object() || !node.contains(field)) return "null";
    return node.at(field).dump(2);
}

}  // namespace

JudgeSummary run_semantic_judges(const EvalTree& gold, const EvalTree& system,
                                 const Alignment& alignment, backend::LlmBackend& llm,
                                 const prompts::PromptLibrary& lib) {
    static const std::pair<JudgeDimension, const char*> kDimensions[] = {
        {JudgeDimension::Threshold, "threshold"},
        {JudgeDimension::Reference, "references"},
        {JudgeDimension::Footnote, "footnotes"},
        {JudgeDimension::Dependency, "dependencies"},
    };
    JudgeSummary summary;
    std::map<std::string, std::vector<int>> scores;
    for (const auto& pair : alignment.pairs) {
        const EvalNode& g = gold.nodes[static_cast<std::size_t>(pair.gold)];
        const EvalNode& s = system.nodes[static_cast<std::size_t>(pair.system)];
        for (const auto& [dimension, field] : kDimensions) {
            JudgeInputs inputs;
            inputs.verbatim = g.verbatim_text;
            inputs.gold_field = field_dump(g.raw, field);
            inputs.system_field = field_dump(s.raw, field);
            auto score = judge(dimension, inputs, llm, lib);
            const std::string name = to_string(dimension);
            if (!score) {
                ++summary.missing[name];
            } else if (score->score == 0) {
                ++summary.zeros[name];
            } else {
                scores[name].push_back(score->score);
            }
        }
    }
    for (const auto& [name, values] : scores) {
        if (auto mean = semantic_mean(values)) {
            summary.means[name] = *mean;
            summary.scored[name] = static_cast<int>(values.size());
        }
    }
    return summary;
}

BinnedMeans calibration_report(const std::vector<CalibrationRecord>& records) {
    BinnedMeans out;
    out.confidence_bins.resize(5);
    std::vector<std::map<std::string, double>> bin_sums(5);
    std::vector<std::map<std::string, int>> bin_counts(5);
    for (int i = 0; i < 5; ++i) {
        out.confidence_bins[static_cast<std::size_t>(i)].lo = i * 0.2;
        out.confidence_bins[static_cast<std::size_t>(i)].hi = (i + 1) * 0.2;
    }

    std::map<int, std::map<std::string, double>> iter_sums;
    std::map<int, std::map<std::string, int>> iter_counts;

    for (const auto& record : records) {
        int bin = static_cast<int>(std::floor(record.confidence / 0.2));
        bin = std::clamp(bin, 0, 4);
        ++out.confidence_bins[static_cast<std::size_t>(bin)].count;
        ++out.iteration_counts[record.iterations];
        for (const auto& [dimension, value] : record.scores) {
            bin_sums[static_cast<std::size_t>(bin)][dimension] += value;
            ++bin_counts[static_cast<std::size_t>(bin)][dimension];
            iter_sums[record.iterations][dimension] += value;
            ++iter_counts[record.iterations][dimension];
        }
    }

    for (int i = 0; i < 5; ++i) {
        for (const auto& [dimension, total] : bin_sums[static_cast<std::size_t>(i)]) {
            out.confidence_bins[static_cast<std::size_t>(i)].means[dimension] =
                total / bin_counts[static_cast<std::size_t>(i)][dimension];
        }
    }
    for (const auto& [iterations, sums] : iter_sums) {
        for (const auto& [dimension, total] : sums) {
            out.by_iteration[iterations][dimension] = total / iter_counts[iterations][dimension];
        }
    }
    return out;
}

std::vector<CalibrationRecord> run_rag_judges(
    const schema::CriterionNode& root,
    const std::function<std::optional<std::string>(const std::string&)>& markdown_for,
    const std::map<std::string, int>& iterations, const std::string& internal_doc_id,
    backend::LlmBackend& llm, const prompts::PromptLibrary& lib) {
    std::vector<CalibrationRecord> out;
    std::function<void(const schema::CriterionNode&)> walk = [&](const schema::CriterionNode& node) {
        auto judge_record = [&](const schema::EnrichmentRecord& record, const std::string& doc_id,
                                const std::string& source_label) {
            auto markdown = markdown_for(doc_id);
            if (!markdown) return;
            std::string chunk_texts;
            for (const auto& chunk : rag::chunk_document(*markdown, doc_id)) {
                chunk_texts += chunk.text + "\n";
            }
            JudgeInputs inputs;
            inputs.criterion = node.verbatim_text;
            inputs.chunks = chunk_texts;
            inputs.summary = record.summary;
            inputs.key_facts = nlohmann::ordered_json(record.key_facts).dump();
            inputs.thresholds = nlohmann::ordered_json(record.thresholds).dump();

            CalibrationRecord cal;
            cal.confidence = record.confidence;
            auto it = iterations.find(node.criterion_id + "|" + doc_id);
            if (it == iterations.end()) {
                it = iterations.find(node.criterion_id + "|" + source_label);
            }
            cal.iterations = it == iterations.end() ? 1 : it->second;
            for (auto dimension : {JudgeDimension::Faithfulness, JudgeDimension::Relevance,
                                   JudgeDimension::Completeness, JudgeDimension::Coverage}) {
                if (auto score = judge(dimension, inputs, llm, lib)) {
                    cal.scores[to_string(dimension)] = score->score;
                }
            }
            if (!cal.scores.empty()) out.push_back(std::move(cal));
        };
        auto handle = [&](const std::optional<schema::EnrichmentRecord>& record,
                          const std::optional<std::string>& celex, const std::string& text) {
            if (!record || record->status != schema::EnrichStatus::Retrieved) return;
            judge_record(*record, celex ? *celex : internal_doc_id, text);
        };
        if (node.references) {
            for (const auto& source : node.references->sources) {
                handle(source.enrichment, source.celex_id, source.text);
            }
        }
        for (const auto& footnote : node.footnotes) {
            for (const auto& item : footnote.items) handle(item.enrichment, item.celex_id, item.title);
        }
        for (const auto& child : node.sub_criteria) walk(child);
    };
    walk(root);
    return out;
}

std::string render_metric_table(const std::vector<std::tuple<std::string, double, int>>& rows) {
    std::size_t width = 6;
    for (const auto& [name, _, __] : rows) width = std::max(width, name.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width) + 2) << "Metric" << std::right
        << std::setw(10) << "Value" << std::setw(8) << "n" << "\n";
    out << std::string(width + 20, '-') << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& [name, value, n] : rows) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << name << std::right
            << std::setw(10) << value << std::setw(8) << n << "\n";
    }
    return out.str();
}

std::string render_calibration_csv(const BinnedMeans& binned) {
    std::set<std::string> dimensions;
    for (const auto& bin : binned.confidence_bins) {
        for (const auto& [dimension, _] : bin.means) dimensions.insert(dimension);
    }
    std::ostringstream csv;
    csv << "bin_lo,bin_hi,count";
    for (const auto& d : dimensions) csv << "," << d;
    csv << "\n";
    for (const auto& bin : binned.confidence_bins) {
        csv << bin.lo << "," << bin.hi << "," << bin.count;
        for (const auto& d : dimensions) {
            auto it = bin.means.find(d);
            csv << ",";
            if (it != bin.means.end()) csv << it->second;
        }
        csv << "\n";
    }
    return csv.str();
}

}  // namespace critex::evalkit
