#include "critex/stages.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <regex>
#include <set>

#include "critex/schema_json.hpp"
#include "critex/text.hpp"

namespace critex::stages {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string with_guidance(std::string user, const std::string& guidance) {
    if (!guidance.empty()) user += "\n\n[Repair guidance] " + guidance;
    return user;
}

json ask(ExtractionState& state, backend::LlmBackend& llm, const prompts::PromptLibrary& lib,
         const std::string& template_name, const std::map<std::string, std::string>& vars,
         const std::string& guidance) {
    backend::CompletionRequest request;
    request.system = lib.render("stage_system", {});
    request.user = with_guidance(lib.render(template_name, vars), guidance);
    ++state.backend_calls;
    return backend::complete_json(llm, request);
}

// ---------------------------------------------------------------------
// Marker and identifier helpers
// ---------------------------------------------------------------------

std::string marker_inner(const std::string& marker) {
    static const std::regex paren(R"(^\(([0-9a-z]+)\)$)");
    static const std::regex dotted(R"(^(\d+)[.)]$)");
    std::smatch m;
    if (std::regex_match(marker, m, paren)) return m[1].str();
    if (std::regex_match(marker, m, dotted)) return m[1].str();
    return marker;
}

int marker_rank(const std::string& marker) {
    std::string inner = marker_inner(marker);
    if (inner.empty()) return 0;
    if (std::isdigit(static_cast<unsigned char>(inner[0]))) {
        try {
            return std::stoi(inner);
        } catch (...) {
            return 0;
        }
    }
    static const std::map<std::string, int> roman = {
        {"i", 1},  {"ii", 2},   {"iii", 3}, {"iv", 4},  {"v", 5},
        {"vi", 6}, {"vii", 7},  {"viii", 8}, {"ix", 9},  {"x", 10}};
    if (inner.size() > 1) {
        auto it = roman.find(inner);
        if (it != roman.end()) return it->second;
    }
    if (inner.size() == 1 && std::islower(static_cast<unsigned char>(inner[0]))) {
        return inner[0] - 'a' + 1;
    }
    return 0;
}

std::string make_child_id(const std::string& parent, const std::string& marker) {
    std::string inner = marker_inner(marker);
    if (parent == "ROOT") return inner;
    return parent + "(" + inner + ")";
}

// ---------------------------------------------------------------------
// Shared formatting
// ---------------------------------------------------------------------

std::string number_string(double v) {
    return schema::canonical_number(v).dump();
}

std::string threshold_context(const NodeDraft& draft) {
    if (!draft.threshold) return "none";
    return schema::threshold_to_json(*draft.threshold).dump();
}

const char* kReferenceTrigger =
    R"((Regulation|Directive|Decision|Recommendation|\bISO\b|\bEN\s+\d|\bIEC\b|Section|Annex|Article))";

bool has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

// Internal criterion mentions such as "point 1(b)(i)" or "criterion 2(a)".
std::vector<std::string> internal_refs(const std::string& text) {
    static const std::regex re(
        R"((?:point|points|criterion|criteria)\s+((?:\d+|[A-Z]{1,3})(?:\([0-9a-z]{1,4}\))*))");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator();
         ++it) {
        std::string id = (*it)[1].str();
        if (seen.insert(id).second) out.push_back(id);
    }
    return out;
}

}  // namespace

std::vector<std::string> ExtractionState::ids_in_document_order() const {
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (const auto& [id, _] : nodes) ids.push_back(id);
    std::sort(ids.begin(), ids.end(), [this](const std::string& a, const std::string& b) {
        const auto& na = nodes.at(a);
        const auto& nb = nodes.at(b);
        if (na.seq != nb.seq) return na.seq < nb.seq;
        // Containers precede their members at equal seq.
        if (na.synthetic != nb.synthetic) return na.synthetic;
        return a < b;
    });
    return ids;
}

NodeDraft& ExtractionState::node(const std::string& id) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw StageFailure("unknown node id: " + id);
    return it->second;
}

// ---------------------------------------------------------------------
// Stage 1
// ---------------------------------------------------------------------

nlohmann::ordered_json stage1_structural_parse(ExtractionState& state, backend::LlmBackend& llm,
                                               const prompts::PromptLibrary& lib,
                                               const std::string& guidance) {
    state.pending_issues.clear();
    state.nodes.clear();
    state.edge_log.clear();

    if (state.doc.segments.empty()) throw StageFailure("activity document has no segments");

    auto create_node = [&](const std::string& id, const std::string& parent, int seq,
                           bool synthetic) -> NodeDraft& {
        NodeDraft draft;
        draft.id = id;
        draft.parent = parent;
        draft.seq = seq;
        draft.synthetic = synthetic;
        auto [it, inserted] = state.nodes.emplace(id, std::move(draft));
        if (!inserted) {
            state.pending_issues.push_back(
                {odr::IssueKind::Structural, odr::Severity::Major, id,
                 "duplicate criterion id assigned during structural parse", ""});
        }
        return it->second;
    };

    create_node("ROOT", "", -1, true);

    struct ListCtx {
        int depth = 0;
        std::string parent;
        int last_rank = 0;
        std::string last_item;
    };
    std::vector<ListCtx> stack;
    std::optional<std::string> colon_anchor;  // id of last node whose text ends with ':'

    // For anchored paragraph bookkeeping: per (anchor, type) family the
    // currently open node (merge target) and the group container.
    struct AnchorFamily {
        std::string container;   // group container id once items exist
        std::string open_node;   // target for mode=continue
        int item_count = 0;
    };
    std::map<std::string, AnchorFamily> families;

    auto available_ids = [&]() {
        std::vector<std::string> ids;
        for (const auto& [id, _] : state.nodes) {
            if (id != "ROOT") ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end());
        return text::join(ids, ", ");
    };

    std::string last_list_item_id;

    for (std::size_t i = 0; i < state.doc.segments.size(); ++i) {
        const auto& segment = state.doc.segments[i];
        if (segment.kind == ingest::SegmentKind::Heading) continue;

        if (segment.kind == ingest::SegmentKind::ListItem) {
            while (!stack.empty() && stack.back().depth > segment.depth_hint) stack.pop_back();
            const int rank = marker_rank(segment.marker);
            bool have_ctx = !stack.empty() && stack.back().depth == segment.depth_hint;
            if (have_ctx && rank != 0 && rank <= stack.back().last_rank) {
                // Marker restart: a sibling list in the markup. When the
                // previous item ended with a colon it owns the new list.
                std::string new_parent =
                    colon_anchor && *colon_anchor != stack.back().parent ? *colon_anchor
                                                                         : stack.back().parent;
                stack.pop_back();
                stack.push_back(ListCtx{segment.depth_hint, new_parent, 0, ""});
            } else if (!have_ctx) {
                std::string parent;
                if (colon_anchor) {
                    parent = *colon_anchor;
                } else if (!stack.empty() && !stack.back().last_item.empty()) {
                    parent = stack.back().last_item;
                } else {
                    parent = "ROOT";
                }
                stack.push_back(ListCtx{segment.depth_hint, parent, 0, ""});
            }
            ListCtx& ctx = stack.back();
            const std::string id = make_child_id(ctx.parent, segment.marker);
            NodeDraft& draft = create_node(id, ctx.parent, static_cast<int>(i), false);
            draft.verbatim = segment.text;
            draft.footnote_markers = segment.footnote_markers;
            ctx.last_rank = rank;
            ctx.last_item = id;
            last_list_item_id = id;
            colon_anchor = text::ends_with(segment.text, ":") ? std::optional(id) : std::nullopt;
            continue;
        }

        // Unnumbered paragraph: semantic anchoring via the backend.
        json reply = ask(state, llm, lib, "stage1_anchor",
                         {{"paragraph", segment.text},
                          {"preceding_id", last_list_item_id},
                          {"available_ids", available_ids()}},
                         guidance);
        std::string anchor = reply.value("anchor_id", std::string{});
        std::string type = reply.value("semantic_type", std::string("BackgroundInformation"));
        std::string placement = reply.value("placement", std::string("sibling"));
        std::string mode = reply.value("mode", std::string("start"));

        std::string family_key = anchor + "." + type;
        std::string family_id = anchor.empty() ? type : anchor + "." + type;
        std::string parent;
        if (placement == "child" && state.has_node(anchor)) {
            parent = anchor;
        } else if (state.has_node(anchor)) {
            parent = state.node(anchor).parent;
        } else {
            parent = "ROOT";
            if (!anchor.empty()) {
                state.pending_issues.push_back({odr::IssueKind::Structural, odr::Severity::Major,
                                                family_id, "anchor id not found: " + anchor, ""});
            }
        }

        AnchorFamily& family = families[family_key];
        NodeDraft* target = nullptr;
        if (mode == "continue" && !family.open_node.empty()) {
            target = &state.node(family.open_node);
            target->verbatim = text::normalize_ws(target->verbatim + " " + segment.text);
            for (const auto& marker : segment.footnote_markers) {
                target->footnote_markers.push_back(marker);
            }
        } else if (mode == "item") {
            if (family.container.empty()) {
                NodeDraft& container = create_node(family_id, parent, static_cast<int>(i), true);
                container.logic = schema::EvalLogic::And;
                std::string summary = reply.value("group_summary", std::string{});
                container.rule_summary = summary;
                try {
                    container.tags = {schema::tag_from_string(type)};
                } catch (const std::invalid_argument&) {
                }
                family.container = family_id;
            }
            ++family.item_count;
            std::string child_id =
                family_id + "(" + std::string(1, static_cast<char>('a' + family.item_count - 1)) + ")";
            NodeDraft& child = create_node(child_id, family_id, static_cast<int>(i), false);
            child.verbatim = segment.text;
            child.footnote_markers = segment.footnote_markers;
            family.open_node = child_id;
            target = &child;
        } else {  // start (or continue without an open node)
            if (state.has_node(family_id)) {
                target = &state.node(family_id);
                target->verbatim = text::normalize_ws(target->verbatim + " " + segment.text);
            } else {
                NodeDraft& node = create_node(family_id, parent, static_cast<int>(i), false);
                node.verbatim = segment.text;
                node.footnote_markers = segment.footnote_markers;
                family.open_node = family_id;
                target = &node;
            }
        }
        colon_anchor = target && text::ends_with(target->verbatim, ":")
                           ? std::optional(target->id)
                           : std::nullopt;
    }

    // Evaluation logic: chapeau inference for parents, LEAF for leaves,
    // AND for synthesized containers and ROOT.
    std::map<std::string, int> child_counts;
    for (const auto& [id, draft] : state.nodes) {
        if (!draft.parent.empty()) ++child_counts[draft.parent];
    }
    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        const int children = child_counts.count(id) ? child_counts[id] : 0;
        if (children == 0) {
            if (!draft.synthetic) draft.logic = schema::EvalLogic::Leaf;
            continue;
        }
        if (draft.synthetic || draft.verbatim.empty()) {
            draft.logic = schema::EvalLogic::And;
            continue;
        }
        json reply = ask(state, llm, lib, "stage1_logic", {{"chapeau_text", draft.verbatim}},
                         guidance);
        draft.logic = schema::eval_logic_from_string(reply.value("logic", std::string("AND")));
        if (draft.logic == schema::EvalLogic::NOfK && reply.contains("n_required") &&
            reply.at("n_required").is_number_integer()) {
            draft.n_required = reply.at("n_required").get<int>();
        }
        if (draft.logic == schema::EvalLogic::Leaf) draft.logic = schema::EvalLogic::And;
    }

    // Hierarchy edges for the log.
    for (const auto& [id, draft] : state.nodes) {
        if (!draft.parent.empty()) {
            state.edge_log.push_back({1, graph::EdgeKind::Hierarchy, draft.parent, id, ""});
        }
    }

    ojson payload;
    payload["stage"] = 1;
    ojson nodes = ojson::array();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        ojson item;
        item["id"] = id;
        item["parent"] = draft.parent;
        item["logic"] = schema::to_string(draft.logic);
        item["text"] = draft.verbatim;
        nodes.push_back(item);
    }
    payload["nodes"] = nodes;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 2
// ---------------------------------------------------------------------

namespace {

std::optional<schema::QuantThreshold> parse_quant_reply(const json& reply) {
    if (!reply.contains("quantitative") || reply.at("quantitative").is_null()) return std::nullopt;
    const json& q = reply.at("quantitative");
    schema::QuantThreshold out;
    if (q.contains("logic") && q.at("logic").is_string()) {
        out.logic = schema::group_logic_from_string(q.at("logic").get<std::string>());
    }
    for (const auto& item : q.value("items", json::array())) {
        schema::QuantItem qi;
        qi.metric = item.value("metric", std::string{});
        qi.op = schema::operator_from_string(item.value("operator", std::string("<=")));
        qi.value = item.value("value", 0.0);
        qi.unit = item.value("unit", std::string{});
        if (item.contains("period") && !item.at("period").is_null()) {
            const json& p = item.at("period");
            schema::Period period;
            if (p.value("type", std::string{}) == "lifetime") {
                period.kind = schema::Period::Kind::Lifetime;
            } else {
                period.kind = schema::Period::Kind::Bounded;
                period.value = p.value("value", 0);
                period.unit = schema::period_unit_from_string(p.value("unit", std::string("years")));
            }
            qi.period = period;
        }
        out.items.push_back(std::move(qi));
    }
    if (out.items.empty()) return std::nullopt;
    return out;
}

std::optional<schema::TemporalThreshold> parse_temporal_reply(const json& reply) {
    if (!reply.contains("temporal") || reply.at("temporal").is_null()) return std::nullopt;
    const json& t = reply.at("temporal");
    schema::TemporalThreshold out;
    if (t.contains("logic") && t.at("logic").is_string()) {
        out.logic = schema::group_logic_from_string(t.at("logic").get<std::string>());
    }
    for (const auto& item : t.value("items", json::array())) {
        schema::TemporalItem ti;
        const std::string type = item.value("type", std::string{});
        if (type == "deadline") {
            ti.kind = schema::TemporalItem::Kind::Deadline;
            ti.date = item.value("date", std::string{});
        } else if (type == "effective_from") {
            ti.kind = schema::TemporalItem::Kind::EffectiveFrom;
            ti.date = item.value("date", std::string{});
        } else if (type == "effective_until") {
            ti.kind = schema::TemporalItem::Kind::EffectiveUntil;
            ti.date = item.value("date", std::string{});
        } else if (type == "window") {
            ti.kind = schema::TemporalItem::Kind::Window;
            ti.start = item.value("start", std::string{});
            ti.end = item.value("end", std::string{});
        } else if (type == "recurring") {
            ti.kind = schema::TemporalItem::Kind::Recurring;
            ti.interval_value = item.value("interval_value", 0);
            ti.interval_unit =
                schema::period_unit_from_string(item.value("interval_unit", std::string("years")));
        } else {
            continue;
        }
        out.items.push_back(std::move(ti));
    }
    if (out.items.empty()) return std::nullopt;
    return out;
}

}  // namespace

nlohmann::ordered_json stage2_extract_thresholds(ExtractionState& state, backend::LlmBackend& llm,
                                                 const prompts::PromptLibrary& lib,
                                                 const std::string& guidance) {
    state.pending_issues.clear();
    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        if (draft.synthetic || !has_digit(draft.verbatim)) continue;

        json quant_reply = ask(state, llm, lib, "stage2_quantitative",
                               {{"text", draft.verbatim}}, guidance);
        json temporal_reply = ask(state, llm, lib, "stage2_temporal",
                                  {{"text", draft.verbatim}}, guidance);

        schema::Threshold threshold;
        if (auto quant = parse_quant_reply(quant_reply)) {
            // Reject hallucinated quantities: every value must appear
            // verbatim in the node's source text.
            schema::QuantThreshold kept;
            kept.logic = quant->logic;
            for (auto& item : quant->items) {
                if (draft.verbatim.find(number_string(item.value)) != std::string::npos) {
                    kept.items.push_back(std::move(item));
                } else {
                    state.pending_issues.push_back(
                        {odr::IssueKind::Semantic, odr::Severity::Major, id,
                         "hallucinated quantity " + number_string(item.value) +
                             " not present in source text",
                         draft.verbatim.substr(0, 120)});
                }
            }
            if (kept.items.size() == 1) kept.logic.reset();
            if (!kept.items.empty()) threshold.quantitative = std::move(kept);
        }
        if (auto temporal = parse_temporal_reply(temporal_reply)) {
            schema::TemporalThreshold kept;
            kept.logic = temporal->logic;
            for (auto& item : temporal->items) {
                std::string year;
                if (!item.date.empty()) year = item.date.substr(0, 4);
                if (item.kind == schema::TemporalItem::Kind::Window && !item.start.empty()) {
                    year = item.start.substr(0, 4);
                }
                if (year.empty() || draft.verbatim.find(year) != std::string::npos) {
                    kept.items.push_back(std::move(item));
                } else {
                    state.pending_issues.push_back(
                        {odr::IssueKind::Semantic, odr::Severity::Major, id,
                         "hallucinated date " + item.date + " not grounded in source text",
                         draft.verbatim.substr(0, 120)});
                }
            }
            if (kept.items.size() == 1) kept.logic.reset();
            if (!kept.items.empty()) threshold.temporal = std::move(kept);
        }
        if (threshold.quantitative || threshold.temporal) {
            draft.threshold = threshold;
            state.mem.register_threshold(id, threshold);
        }
    }

    ojson payload;
    payload["stage"] = 2;
    ojson thresholds = ojson::object();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (draft.threshold) thresholds[id] = schema::threshold_to_json(*draft.threshold);
    }
    payload["thresholds"] = thresholds;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 3
// ---------------------------------------------------------------------

nlohmann::ordered_json stage3_classify(ExtractionState& state, backend::LlmBackend& llm,
                                       const prompts::PromptLibrary& lib,
                                       const std::string& guidance) {
    state.pending_issues.clear();

    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        // Category is deterministic: Quantitative iff a quantitative
        // threshold is present. No backend call needed.
        draft.category = draft.threshold && draft.threshold->quantitative
                             ? schema::Category::Quantitative
                             : schema::Category::Qualitative;
        if (draft.synthetic || draft.verbatim.empty()) continue;

        json applicability_reply =
            ask(state, llm, lib, "stage3_applicability",
                {{"criterion_id", id}, {"verbatim_text", draft.verbatim}}, guidance);
        draft.applicability = schema::applicability_from_string(
            applicability_reply.value("applicability", std::string("Mandatory")));

        json tags_reply = ask(state, llm, lib, "stage3_tags_summary",
                              {{"criterion_id", id},
                               {"verbatim_text", draft.verbatim},
                               {"threshold_context", threshold_context(draft)}},
                              guidance);
        draft.tags.clear();
        for (const auto& tag : tags_reply.value("tags", json::array())) {
            draft.tags.push_back(schema::tag_from_string(tag.get<std::string>()));
        }
        draft.rule_summary = tags_reply.value("rule_summary", std::string{});
    }

    // Semantic pathway detection: OR chapeaus whose children mix joint
    // and alternative pathways get a synthesized group container.
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (!draft.parent.empty()) children[draft.parent].push_back(id);
    }
    std::vector<std::string> or_parents;
    for (const auto& [id, kids] : children) {
        if (state.nodes.at(id).logic == schema::EvalLogic::Or && kids.size() >= 3) {
            or_parents.push_back(id);
        }
    }
    std::sort(or_parents.begin(), or_parents.end(), [&](const auto& a, const auto& b) {
        return state.nodes.at(a).seq < state.nodes.at(b).seq;
    });

    for (const auto& parent_id : or_parents) {
        const NodeDraft& parent = state.nodes.at(parent_id);
        std::string listing;
        for (const auto& child_id : children[parent_id]) {
            listing += child_id + ": " + state.nodes.at(child_id).verbatim.substr(0, 80) + "\n";
        }
        json reply = ask(state, llm, lib, "stage3_pathways",
                         {{"criterion_id", parent_id},
                          {"chapeau_text", parent.verbatim},
                          {"children", listing}},
                         guidance);
        for (const auto& group : reply.value("groups", json::array())) {
            std::vector<std::string> members;
            for (const auto& member : group.value("members", json::array())) {
                members.push_back(member.get<std::string>());
            }
            if (members.size() < 2) continue;
            bool all_known = std::all_of(members.begin(), members.end(), [&](const std::string& m) {
                return state.has_node(m);
            });
            if (!all_known) {
                state.pending_issues.push_back({odr::IssueKind::Consistency, odr::Severity::Major,
                                                parent_id, "pathway group names unknown ids", ""});
                continue;
            }
            // Container id uses the literal range form, e.g. "1(a-e)".
            auto suffix_letter = [](const std::string& id) {
                auto pos = id.rfind('(');
                return pos == std::string::npos ? std::string{}
                                                : id.substr(pos + 1, id.size() - pos - 2);
            };
            const std::string container_id =
                parent_id + "(" + suffix_letter(members.front()) + "-" +
                suffix_letter(members.back()) + ")";
            int min_seq = state.nodes.at(members.front()).seq;
            for (const auto& m : members) min_seq = std::min(min_seq, state.nodes.at(m).seq);

            NodeDraft container;
            container.id = container_id;
            container.parent = parent_id;
            container.seq = min_seq;
            container.synthetic = true;
            container.logic = group.value("logic", std::string("AND")) == "OR"
                                  ? schema::EvalLogic::Or
                                  : schema::EvalLogic::And;
            container.rule_summary = group.value("rule_summary", std::string{});
            container.category = schema::Category::Qualitative;
            state.nodes.emplace(container_id, std::move(container));

            for (const auto& member : members) {
                state.node(member).parent = container_id;
                state.edge_log.push_back(
                    {3, graph::EdgeKind::GroupMember, container_id, member, ""});
            }
            state.edge_log.push_back({1, graph::EdgeKind::Hierarchy, parent_id, container_id, ""});
        }
    }

    ojson payload;
    payload["stage"] = 3;
    ojson classification = ojson::object();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        ojson item;
        item["category"] = schema::to_string(draft.category);
        item["applicability"] = schema::to_string(draft.applicability);
        ojson tags = ojson::array();
        for (auto tag : draft.tags) tags.push_back(schema::to_string(tag));
        item["tags"] = tags;
        item["rule_summary"] = draft.rule_summary;
        classification[id] = item;
    }
    payload["classification"] = classification;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 4
// ---------------------------------------------------------------------

nlohmann::ordered_json stage4_extract_references(ExtractionState& state, backend::LlmBackend& llm,
                                                 const prompts::PromptLibrary& lib,
                                                 celex::RegistryClient& registry,
                                                 const std::string& guidance) {
    state.pending_issues.clear();
    static const std::regex trigger(kReferenceTrigger);
    static const std::regex anaphoric(
        R"((that|the same)\s+(Directive|Regulation|Decision|Recommendation))");

    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        if (draft.synthetic || !std::regex_search(draft.verbatim, trigger)) continue;

        json reply = ask(state, llm, lib, "stage4_references", {{"text", draft.verbatim}}, guidance);
        auto sources_json = reply.value("sources", json::array());
        if (sources_json.empty()) continue;

        schema::ReferenceSet refs;
        if (reply.contains("logic") && reply.at("logic").is_string()) {
            refs.logic = schema::group_logic_from_string(reply.at("logic").get<std::string>());
        }
        std::optional<std::string> last_celex;
        for (const auto& source_json : sources_json) {
            schema::ReferenceSource source;
            source.text = source_json.value("text", std::string{});
            source.type = schema::ref_type_from_string(
                source_json.value("type", std::string("citation_only")));
            source.link_status = schema::LinkStatus::Generated;

            if (celex::looks_like_eu_act(source.text)) {
                try {
                    auto parse = celex::normalize_citation(source.text);
                    parse = celex::verify_and_repair(parse, registry);
                    if (parse.verification == celex::Verification::Verified ||
                        parse.verification == celex::Verification::FallbackResolved) {
                        source.celex_id = parse.candidate.render();
                        last_celex = source.celex_id;
                    } else {
                        state.pending_issues.push_back(
                            {odr::IssueKind::Semantic, odr::Severity::Minor, id,
                             "reference flagged for manual review: " + source.text, ""});
                    }
                } catch (const celex::UnrecognizedCitation&) {
                    // fall through to anaphora handling
                } catch (const celex::RegistryUnavailable& e) {
                    state.pending_issues.push_back({odr::IssueKind::Structural,
                                                    odr::Severity::Minor, id,
                                                    std::string("registry unavailable: ") + e.what(),
                                                    ""});
                }
            }
            if (!source.celex_id && last_celex &&
                std::regex_search(source.text, anaphoric)) {
                // "of that Directive" resolves to the preceding act.
                source.celex_id = last_celex;
            }
            if (source.celex_id) {
                auto parsed = celex::CelexId::parse(*source.celex_id);
                if (parsed) source.link = celex::eur_lex_url(*parsed);
            }
            refs.sources.push_back(std::move(source));
        }
        if (refs.sources.size() == 1) refs.logic.reset();
        draft.references = std::move(refs);
    }

    ojson payload;
    payload["stage"] = 4;
    ojson references = ojson::object();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (draft.references) references[id] = schema::references_to_json(*draft.references);
    }
    payload["references"] = references;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 5
// ---------------------------------------------------------------------

namespace {

bool corrects_recorded(const ExtractionState& state, const std::string& from,
                       const std::string& to, const std::string& annotation) {
    return std::any_of(state.edge_log.begin(), state.edge_log.end(), [&](const EdgeRecord& e) {
        return e.kind == graph::EdgeKind::Corrects && e.from == from && e.to == to &&
               e.annotation == annotation;
    });
}

std::string corr_annotation(const std::string& from, const std::string& to) {
    return "[CORR FROM:" + from + " TO:" + to + "]";
}

schema::Threshold apply_selectors(const schema::Threshold& source, const json& selectors,
                                  bool& empty_selection) {
    empty_selection = false;
    if (selectors.is_null() || !selectors.is_array() || selectors.empty()) return source;
    schema::Threshold out;
    if (source.quantitative) {
        schema::QuantThreshold kept;
        for (const auto& item : source.quantitative->items) {
            for (const auto& selector : selectors) {
                const bool wants_period = selector.value("has_period", false);
                if (wants_period) {
                    if (item.period && item.period->kind == schema::Period::Kind::Bounded &&
                        (!selector.contains("period_value") ||
                         selector.at("period_value").is_null() ||
                         selector.at("period_value").get<int>() == item.period->value)) {
                        kept.items.push_back(item);
                        break;
                    }
                } else if (!item.period) {
                    kept.items.push_back(item);
                    break;
                }
            }
        }
        if (!kept.items.empty()) {
            kept.logic = kept.items.size() >= 2 ? source.quantitative->logic : std::nullopt;
            out.quantitative = std::move(kept);
        }
    }
    if (!out.quantitative && !out.temporal) {
        if (source.temporal) {
            out.temporal = source.temporal;  // selectors target quantitative items
        } else {
            empty_selection = true;
            return source;
        }
    }
    return out;
}

}  // namespace

nlohmann::ordered_json stage5_resolve_dependencies(ExtractionState& state,
                                                   backend::LlmBackend& llm,
                                                   const prompts::PromptLibrary& lib,
                                                   const std::string& guidance) {
    state.pending_issues.clear();
    static const std::regex conditional_language(R"(\b(Where|where|If|if|When|when)\b)");

    auto all_ids = [&]() {
        std::vector<std::string> ids;
        for (const auto& [id, _] : state.nodes) {
            if (id != "ROOT") ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end());
        return text::join(ids, ", ");
    };
    auto thresholds_listing = [&]() {
        std::string out;
        for (const auto& id : state.ids_in_document_order()) {
            const NodeDraft& draft = state.nodes.at(id);
            if (draft.threshold) {
                out += id + ": " + schema::threshold_to_json(*draft.threshold).dump() + "\n";
            }
        }
        return out;
    };

    auto record_correction = [&](NodeDraft& draft, const std::string& from, const std::string& to) {
        state.mem.crossref_map[from] = to;
        // The wrong id usually names no vertex, so the Corrects edge is
        // anchored at the referring node; the annotation keeps the full
        // textual provenance.
        const std::string provenance = "[CORR FROM:" + from + " TO:" + to + " REASON:crossref]";
        if (!corrects_recorded(state, draft.id, to, provenance)) {
            state.edge_log.push_back({5, graph::EdgeKind::Corrects, draft.id, to, provenance});
        }
        const std::string annotation = corr_annotation(from, to);
        if (std::find(draft.correction_annotations.begin(), draft.correction_annotations.end(),
                      annotation) == draft.correction_annotations.end()) {
            draft.correction_annotations.push_back(annotation);
        }
    };

    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        if (id == "ROOT") continue;

        const auto refs = internal_refs(draft.verbatim);

        // Cross-reference disambiguation (existing target) and correction
        // (missing target), memoized activity-wide in the crossref map.
        for (const auto& cited : refs) {
            if (cited == id) continue;
            auto mapped = state.mem.crossref_map.find(cited);
            if (mapped != state.mem.crossref_map.end()) {
                if (mapped->second != cited) record_correction(draft, cited, mapped->second);
                continue;
            }
            if (state.has_node(cited)) {
                json reply = ask(state, llm, lib, "stage5_disambiguation",
                                 {{"current_id", id},
                                  {"current_text", draft.verbatim},
                                  {"original_id", cited},
                                  {"available_ids", all_ids()}},
                                 guidance);
                if (reply.contains("correction") && reply.at("correction").is_object()) {
                    std::string to = reply.at("correction").value("to", std::string{});
                    if (state.has_node(to) && to != cited) {
                        record_correction(draft, cited, to);
                    }
                } else {
                    state.mem.crossref_map[cited] = cited;  // confirmed correct
                }
            } else {
                json reply = ask(state, llm, lib, "stage5_correction",
                                 {{"current_id", id},
                                  {"current_text", draft.verbatim},
                                  {"missing_reference", cited},
                                  {"available_ids", all_ids()},
                                  {"criteria_with_thresholds", thresholds_listing()}},
                                 guidance);
                if (reply.contains("correction") && reply.at("correction").is_object()) {
                    std::string to = reply.at("correction").value("to", std::string{});
                    if (state.has_node(to)) record_correction(draft, cited, to);
                } else {
                    state.pending_issues.push_back(
                        {odr::IssueKind::Consistency, odr::Severity::Minor, id,
                         "unresolvable cross-reference " + cited, draft.verbatim.substr(0, 120)});
                }
            }
        }

        // Threshold inheritance.
        if (!refs.empty()) {
            json reply = ask(state, llm, lib, "stage5_inheritance",
                             {{"current_id", id},
                              {"current_text", draft.verbatim},
                              {"available_thresholds", thresholds_listing()}},
                             guidance);
            if (reply.contains("threshold_from") && reply.at("threshold_from").is_string()) {
                const std::string cited = reply.at("threshold_from").get<std::string>();
                const std::string resolved = state.mem.resolve_crossref(cited);
                auto source_threshold = state.mem.lookup_threshold(resolved);
                if (!source_threshold && state.has_node(resolved) &&
                    state.nodes.at(resolved).threshold) {
                    source_threshold = state.nodes.at(resolved).threshold;
                }
                if (source_threshold) {
                    bool empty_selection = false;
                    schema::Threshold inherited = apply_selectors(
                        *source_threshold, reply.value("threshold_selectors", json()),
                        empty_selection);
                    if (empty_selection) {
                        state.pending_issues.push_back(
                            {odr::IssueKind::Consistency, odr::Severity::Minor, id,
                             "threshold selector matched nothing on " + resolved + "; copied all",
                             ""});
                    }
                    draft.threshold = inherited;
                    state.mem.register_threshold(id, inherited);
                    draft.threshold_annotations.push_back("[THRESHOLD_FROM:" + resolved + "]");
                    state.edge_log.push_back(
                        {5, graph::EdgeKind::InheritsThreshold, id, resolved, ""});
                } else {
                    state.pending_issues.push_back(
                        {odr::IssueKind::Consistency, odr::Severity::Minor, id,
                         "inheritance source " + resolved + " has no registered threshold", ""});
                }
            }
        }

        // Applicability dependencies: pathway-anchored nodes and nodes
        // gated by conditional language.
        const bool anchored = schema::anchor_suffix_depth(id) > 0;
        if (anchored || std::regex_search(draft.verbatim, conditional_language)) {
            json reply = ask(state, llm, lib, "stage5_dependency",
                             {{"current_id", id},
                              {"current_text", draft.verbatim},
                              {"available_ids", all_ids()}},
                             guidance);
            if (reply.contains("dependency") && reply.at("dependency").is_object()) {
                const json& dep = reply.at("dependency");
                schema::Dependencies deps;
                deps.condition_summary = dep.value("condition_summary", std::string{});
                deps.min_conditions_to_meet = dep.value("min_conditions_to_meet", 1);
                for (const auto& clause : dep.value("clauses", json::array())) {
                    schema::DependencyClause c;
                    c.criterion_id = clause.value("criterion_id", std::string{});
                    c.status = schema::clause_status_from_string(
                        clause.value("status", std::string("Affirmation")));
                    if (!state.has_node(c.criterion_id)) {
                        state.pending_issues.push_back(
                            {odr::IssueKind::Consistency, odr::Severity::Major, id,
                             "dependency clause cites unknown id " + c.criterion_id, ""});
                        continue;
                    }
                    deps.clauses.push_back(c);
                    state.edge_log.push_back(
                        {5, graph::EdgeKind::DependsOn, id, c.criterion_id, ""});
                }
                if (!deps.clauses.empty()) draft.dependencies = std::move(deps);
            }
        }
    }

    ojson payload;
    payload["stage"] = 5;
    ojson dependencies = ojson::object();
    ojson corrections = ojson::array();
    ojson inheritance = ojson::array();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (draft.dependencies) dependencies[id] = schema::dependencies_to_json(*draft.dependencies);
        for (const auto& a : draft.correction_annotations) corrections.push_back(id + " " + a);
        for (const auto& a : draft.threshold_annotations) inheritance.push_back(id + " " + a);
    }
    payload["dependencies"] = dependencies;
    payload["corrections"] = corrections;
    payload["inheritance"] = inheritance;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 6
// ---------------------------------------------------------------------

nlohmann::ordered_json stage6_process_footnotes(ExtractionState& state, backend::LlmBackend& llm,
                                                const prompts::PromptLibrary& lib,
                                                celex::RegistryClient& registry,
                                                const std::string& guidance) {
    state.pending_issues.clear();
    for (const auto& blob : state.doc.footnotes) {
        // Owning node: the one whose source segments carried the marker.
        std::string owner;
        for (const auto& id : state.ids_in_document_order()) {
            const NodeDraft& draft = state.nodes.at(id);
            if (std::find(draft.footnote_markers.begin(), draft.footnote_markers.end(),
                          blob.footnote_id) != draft.footnote_markers.end()) {
                owner = id;
                break;
            }
        }
        if (owner.empty()) {
            // Orphan: fall back to the nearest preceding node by position.
            int marker_segment = -1;
            for (std::size_t s = 0; s < state.doc.segments.size(); ++s) {
                const auto& markers = state.doc.segments[s].footnote_markers;
                if (std::find(markers.begin(), markers.end(), blob.footnote_id) != markers.end()) {
                    marker_segment = static_cast<int>(s);
                }
            }
            for (const auto& id : state.ids_in_document_order()) {
                const NodeDraft& draft = state.nodes.at(id);
                if (!draft.synthetic && (marker_segment < 0 || draft.seq <= marker_segment)) {
                    owner = id;
                }
            }
            if (owner.empty()) owner = "ROOT";
            state.pending_issues.push_back({odr::IssueKind::Completeness, odr::Severity::Minor,
                                            blob.footnote_id,
                                            "orphan footnote: marker not found in any criterion",
                                            blob.verbatim.substr(0, 120)});
        }

        schema::Footnote footnote;
        footnote.id = blob.footnote_id;
        footnote.verbatim = blob.verbatim;
        if (blob.verbatim.empty()) {
            footnote.notes.push_back("empty footnote body in source");
            state.node(owner).footnotes.push_back(std::move(footnote));
            continue;
        }

        json reply = ask(state, llm, lib, "stage6_footnote", {{"footnote_text", blob.verbatim}},
                         guidance);
        for (const auto& category : reply.value("categories", json::array())) {
            footnote.categories.push_back(category.get<std::string>());
        }
        for (const auto& item_json : reply.value("items", json::array())) {
            schema::FootnoteItem item;
            item.kind = item_json.value("kind", std::string("Other"));
            item.title = item_json.value("title", std::string{});
            item.type = schema::ref_type_from_string(
                item_json.value("type", std::string("citation_only")));
            if (item_json.contains("oj") && item_json.at("oj").is_string()) {
                item.oj = item_json.at("oj").get<std::string>();
            }
            if (item.kind == "EU Legal Act" && celex::looks_like_eu_act(item.title)) {
                try {
                    auto parse = celex::normalize_citation(item.title);
                    if (item.type == schema::RefType::MustBeFetched) {
                        parse = celex::verify_and_repair(parse, registry);
                        if (parse.verification == celex::Verification::Verified ||
                            parse.verification == celex::Verification::FallbackResolved) {
                            item.celex_id = parse.candidate.render();
                        } else {
                            state.pending_issues.push_back(
                                {odr::IssueKind::Semantic, odr::Severity::Minor, owner,
                                 "footnote item flagged for manual review: " + item.title, ""});
                        }
                    } else {
                        item.celex_id = parse.candidate.render();
                    }
                } catch (const celex::UnrecognizedCitation&) {
                }
            }
            footnote.items.push_back(std::move(item));
        }
        for (const auto& def : reply.value("definitions", json::array())) {
            footnote.definitions.push_back({def.value("term", std::string{}),
                                            def.value("definition", std::string{})});
        }
        for (const auto& note : reply.value("notes", json::array())) {
            footnote.notes.push_back(note.get<std::string>());
        }

        // D.11 validation: Legal Reference requires an EU act or treaty.
        bool has_act = std::any_of(footnote.items.begin(), footnote.items.end(),
                                   [](const schema::FootnoteItem& item) {
                                       return item.kind == "EU Legal Act" ||
                                              item.kind.find("Treaty") != std::string::npos;
                                   });
        bool claims_legal = std::find(footnote.categories.begin(), footnote.categories.end(),
                                      "Legal Reference") != footnote.categories.end();
        if (claims_legal && !has_act) {
            state.pending_issues.push_back(
                {odr::IssueKind::Consistency, odr::Severity::Major, blob.footnote_id,
                 "footnote claims Legal Reference without an EU legal act item", ""});
        }
        state.node(owner).footnotes.push_back(std::move(footnote));
    }

    ojson payload;
    payload["stage"] = 6;
    ojson footnotes = ojson::object();
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (!draft.footnotes.empty()) {
            ojson list = ojson::array();
            for (const auto& f : draft.footnotes) list.push_back(schema::footnote_to_json(f));
            footnotes[id] = list;
        }
    }
    payload["footnotes"] = footnotes;
    return payload;
}

// ---------------------------------------------------------------------
// Stage 7
// ---------------------------------------------------------------------

namespace {

std::string operator_phrase(schema::Operator op) {
    switch (op) {
        case schema::Operator::Lt: return "below";
        case schema::Operator::Le: return "at most";
        case schema::Operator::Gt: return "above";
        case schema::Operator::Ge: return "at least";
        case schema::Operator::Eq: return "equal to";
    }
    return {};
}

std::string fallback_summary(const NodeDraft& draft) {
    if (draft.threshold && draft.threshold->quantitative &&
        !draft.threshold->quantitative->items.empty()) {
        std::string out;
        const auto& items = draft.threshold->quantitative->items;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& item = items[i];
            if (i == 0) {
                out = item.metric + " must be " + operator_phrase(item.op) + " " +
                      number_string(item.value) + " " + item.unit;
            } else {
                out += ", or " + operator_phrase(item.op) + " " + number_string(item.value) + " " +
                       item.unit;
            }
            if (item.period && item.period->kind == schema::Period::Kind::Bounded) {
                out += " over " + std::to_string(item.period->value) + " " +
                       schema::to_string(item.period->unit);
            } else if (item.period) {
                out += " over the lifetime";
            }
        }
        return out + ".";
    }
    if (draft.threshold && draft.threshold->temporal && !draft.threshold->temporal->items.empty()) {
        const auto& item = draft.threshold->temporal->items.front();
        if (item.kind == schema::TemporalItem::Kind::Deadline) {
            return "Must be satisfied by " + item.date + ".";
        }
    }
    std::string head = draft.verbatim.substr(0, 160);
    return head.empty() ? "Synthesized grouping node." : head;
}

std::string root_summary(const std::vector<std::string>& child_ids) {
    std::string listing;
    for (std::size_t i = 0; i < child_ids.size(); ++i) {
        if (i > 0) listing += child_ids.size() == 2 ? " and " : ", ";
        if (i + 1 == child_ids.size() && child_ids.size() > 2) listing += "and ";
        listing += child_ids[i];
    }
    return "The activity must satisfy all top-level criteria (" + listing + ").";
}

}  // namespace

graph::CriterionGraph build_pipeline_graph(const schema::CriterionNode& root,
                                           const std::string& activity_id,
                                           const std::vector<EdgeRecord>& edge_log) {
    graph::CriterionGraph g = graph::build_graph_from_tree(root, activity_id);
    std::map<int, std::vector<graph::Edge>> by_stage;
    for (const auto& record : edge_log) {
        if (record.kind == graph::EdgeKind::Hierarchy) continue;  // nesting is authoritative
        by_stage[record.stage].push_back(
            graph::Edge{record.kind, record.from, record.to, record.stage, record.annotation});
    }
    for (auto& [stage, edges] : by_stage) graph::add_edges_from_stage(g, stage, edges);
    return g;
}

ActivityResult stage7_assemble(ExtractionState& state) {
    state.pending_issues.clear();

    std::map<std::string, std::vector<std::string>> children;
    for (const auto& id : state.ids_in_document_order()) {
        const NodeDraft& draft = state.nodes.at(id);
        if (!draft.parent.empty()) children[draft.parent].push_back(id);
    }

    // Finalize drafts: category recomputation (inheritance may have added
    // thresholds after stage 3), summaries with bracket annotations.
    for (const auto& id : state.ids_in_document_order()) {
        NodeDraft& draft = state.node(id);
        draft.category = draft.threshold && draft.threshold->quantitative
                             ? schema::Category::Quantitative
                             : schema::Category::Qualitative;
        if (id == "ROOT") {
            draft.rule_summary = root_summary(children.count(id) ? children[id]
                                                                 : std::vector<std::string>{});
            continue;
        }
        if (draft.rule_summary.empty()) draft.rule_summary = fallback_summary(draft);
        for (const auto& annotation : draft.threshold_annotations) {
            draft.rule_summary += " " + annotation;
        }
        for (const auto& annotation : draft.correction_annotations) {
            draft.rule_summary += " " + annotation;
        }
    }

    std::function<schema::CriterionNode(const std::string&)> build =
        [&](const std::string& id) -> schema::CriterionNode {
        const NodeDraft& draft = state.nodes.at(id);
        schema::CriterionNode node;
        node.criterion_id = id;
        node.category = draft.category;
        node.applicability = draft.applicability;
        node.tags = draft.tags;
        node.verbatim_text = draft.verbatim;
        node.rule_summary = draft.rule_summary;
        node.evaluation_logic = draft.logic;
        node.n_required = draft.n_required;
        node.threshold = draft.threshold;
        node.references = draft.references;
        node.dependencies = draft.dependencies;
        node.footnotes = draft.footnotes;
        auto it = children.find(id);
        if (it != children.end()) {
            for (const auto& child_id : it->second) node.sub_criteria.push_back(build(child_id));
        }
        return node;
    };

    ActivityResult result;
    result.tree.activity_id = state.doc.activity_id;
    result.tree.activity_name = state.doc.activity_name;
    result.tree.objective = state.doc.objective;
    result.tree.root = schema::normalize_node(build("ROOT"));
    result.schema_violations = schema::validate_node(result.tree.root);
    for (const auto& v : state.violations) result.schema_violations.push_back(v);

    graph::CriterionGraph g =
        build_pipeline_graph(result.tree.root, state.doc.activity_id, state.edge_log);
    graph::reposition_misnested(g);
    result.graph_report = graph::validate(g);
    result.backend_calls = state.backend_calls;
    return result;
}

// ---------------------------------------------------------------------
// Pipeline driver under ODR control
// ---------------------------------------------------------------------

namespace {
const char* const kStageNames[7] = {
    "structural_parse", "threshold_extraction", "classification", "reference_extraction",
    "dependency_resolution", "footnote_processing", "schema_assembly"};
}  // namespace

ActivityResult extract_activity(const ingest::ActivityDocument& doc, backend::LlmBackend& llm,
                                const prompts::PromptLibrary& lib,
                                celex::RegistryClient& registry,
                                const PipelineOptions& options) {
    ExtractionState state;
    state.doc = doc;
    state.mem.activity_metadata = {doc.activity_name, doc.objective, "", ""};

    const std::string source = text::normalize_ws(ingest::visible_text(doc.raw_html));

    odr::LoopOptions loop_options;
    loop_options.tau = options.tau;
    loop_options.k_max = options.k_max;
    loop_options.wall_clock_budget = options.stage_budget;

    nlohmann::ordered_json traces = nlohmann::ordered_json::array();
    bool flagged = false;

    auto run_stage = [&](int stage_id, const std::string& guidance) -> nlohmann::ordered_json {
        switch (stage_id) {
            case 1: return stage1_structural_parse(state, llm, lib, guidance);
            case 2: return stage2_extract_thresholds(state, llm, lib, guidance);
            case 3: return stage3_classify(state, llm, lib, guidance);
            case 4: return stage4_extract_references(state, llm, lib, registry, guidance);
            case 5: return stage5_resolve_dependencies(state, llm, lib, guidance);
            case 6: return stage6_process_footnotes(state, llm, lib, registry, guidance);
            default: throw StageFailure("bad stage id");
        }
    };

    for (int stage_id = 1; stage_id <= 6; ++stage_id) {
        ExtractionState snapshot = state;
        odr::StageUnit unit;
        unit.name = kStageNames[stage_id - 1];
        unit.source_text = source;
        unit.run = [&, stage_id]() {
            state = snapshot;
            return run_stage(stage_id, "");
        };
        unit.rerun = [&, stage_id](const odr::Diagnosis& diagnosis, const nlohmann::json&) {
            state = snapshot;
            return run_stage(stage_id, diagnosis.specific_guidance.empty()
                                          ? diagnosis.root_cause
                                          : diagnosis.specific_guidance);
        };
        unit.fallback = [&, stage_id]() {
            state = snapshot;
            return run_stage(stage_id, "");
        };
        unit.pre_check = [&](const nlohmann::json&) { return state.pending_issues; };

        odr::LoopResult loop = odr::run_loop(unit, llm, lib, loop_options);
        for (const auto& record : odr::trace_to_json(unit.name, loop.state)) traces.push_back(record);
        if (loop.state.flag_for_review) flagged = true;
        for (const auto& issue : loop.state.best_issues) {
            state.violations.push_back({"OdrIssue", issue.field, odr::to_string(issue.kind),
                                        issue.description});
        }
    }

    // Stage 7 is deterministic assembly; its ODR observation runs on the
    // finished tree.
    ActivityResult result = stage7_assemble(state);
    {
        odr::StageUnit unit;
        unit.name = kStageNames[6];
        unit.source_text = source;
        nlohmann::ordered_json payload;
        payload["stage"] = 7;
        payload["tree"] = schema::node_to_json(result.tree.root);
        unit.run = [payload]() { return payload; };
        unit.pre_check = [](const nlohmann::json&) { return std::vector<odr::Issue>{}; };
        odr::LoopResult loop = odr::run_loop(unit, llm, lib, loop_options);
        for (const auto& record : odr::trace_to_json(unit.name, loop.state)) traces.push_back(record);
        if (loop.state.flag_for_review) flagged = true;
    }

    result.odr_traces = traces;
    result.flagged = flagged;
    result.backend_calls = llm.call_count();
    return result;
}

}  // namespace critex::stages
