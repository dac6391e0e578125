#include "critex/graph.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace critex::graph {

namespace {

const std::set<std::string>& anchor_types() {
    static const std::set<std::string> types = {"Verification", "Methodology", "Commitment",
                                                "Assessment",   "Replacement", "BackgroundInformation"};
    return types;
}

bool kind_legal_for_stage(EdgeKind kind, int stage) {
    switch (kind) {
        case EdgeKind::Hierarchy: return stage == 1;
        case EdgeKind::GroupMember: return stage == 2 || stage == 3;
        // Inheritance relationships surface both during classification and
        // when stage 5 copies registry thresholds.
        case EdgeKind::InheritsThreshold: return stage >= 2 && stage <= 5 && stage != 4;
        case EdgeKind::References: return stage == 4 || stage == 5;
        case EdgeKind::DependsOn: return stage == 4 || stage == 5;
        case EdgeKind::Corrects: return stage == 5 || stage == 6;
    }
    return false;
}

}  // namespace

std::string to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::Hierarchy: return "Hierarchy";
        case EdgeKind::GroupMember: return "GroupMember";
        case EdgeKind::InheritsThreshold: return "InheritsThreshold";
        case EdgeKind::References: return "References";
        case EdgeKind::DependsOn: return "DependsOn";
        case EdgeKind::Corrects: return "Corrects";
    }
    return {};
}

std::optional<CriterionId> CriterionId::parse(const std::string& id) {
    if (id.empty()) return std::nullopt;
    CriterionId out;
    std::size_t i = 0;

    auto read_base = [&]() -> bool {
        std::string value;
        while (i < id.size() && (std::isalnum(static_cast<unsigned char>(id[i])) || id[i] == '_')) {
            value.push_back(id[i++]);
        }
        if (value.empty()) return false;
        out.parts.push_back({Part::Kind::Base, value, 0, 0});
        return true;
    };
    if (!read_base()) return std::nullopt;

    while (i < id.size()) {
        if (id[i] == '(') {
            std::size_t close = id.find(')', i);
            if (close == std::string::npos) return std::nullopt;
            std::string inner = id.substr(i + 1, close - i - 1);
            if (inner.empty()) return std::nullopt;
            if (inner.size() == 3 && inner[1] == '-' && std::islower(static_cast<unsigned char>(inner[0])) &&
                std::islower(static_cast<unsigned char>(inner[2])) && inner[0] < inner[2]) {
                out.parts.push_back({Part::Kind::Range, inner, inner[0], inner[2]});
            } else if (std::all_of(inner.begin(), inner.end(), [](unsigned char c) {
                           return std::isalnum(c);
                       })) {
                out.parts.push_back({Part::Kind::Paren, inner, 0, 0});
            } else {
                return std::nullopt;
            }
            i = close + 1;
        } else if (id[i] == '.') {
            std::size_t j = i + 1;
            std::string value;
            while (j < id.size() && std::isalpha(static_cast<unsigned char>(id[j]))) {
                value.push_back(id[j++]);
            }
            if (!anchor_types().count(value)) return std::nullopt;
            out.parts.push_back({Part::Kind::Anchor, value, 0, 0});
            i = j;
        } else {
            return std::nullopt;
        }
    }
    return out;
}

std::string CriterionId::render() const {
    std::string out;
    for (const auto& part : parts) {
        switch (part.kind) {
            case Part::Kind::Base: out += part.value; break;
            case Part::Kind::Paren:
            case Part::Kind::Range: out += "(" + part.value + ")"; break;
            case Part::Kind::Anchor: out += "." + part.value; break;
        }
    }
    return out;
}

void CriterionGraph::add_vertex(const std::string& id, const schema::CriterionNode* node) {
    vertices_[id] = node;
}

const schema::CriterionNode* CriterionGraph::vertex(const std::string& id) const {
    auto it = vertices_.find(id);
    return it == vertices_.end() ? nullptr : it->second;
}

std::vector<Edge> CriterionGraph::edges_of_kind(EdgeKind kind) const {
    std::vector<Edge> out;
    for (const auto& e : edges_) {
        if (e.kind == kind) out.push_back(e);
    }
    return out;
}

std::optional<std::string> CriterionGraph::hierarchy_parent(const std::string& id) const {
    for (const auto& e : edges_) {
        if (e.kind == EdgeKind::Hierarchy && e.to == id) return e.from;
    }
    return std::nullopt;
}

std::vector<std::string> CriterionGraph::hierarchy_children(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& e : edges_) {
        if (e.kind == EdgeKind::Hierarchy && e.from == id) out.push_back(e.to);
    }
    return out;
}

void CriterionGraph::set_hierarchy_parent(const std::string& id, const std::string& parent,
                                          int stage) {
    edges_.erase(std::remove_if(edges_.begin(), edges_.end(),
                                [&](const Edge& e) {
                                    return e.kind == EdgeKind::Hierarchy && e.to == id;
                                }),
                 edges_.end());
    edges_.push_back(Edge{EdgeKind::Hierarchy, parent, id, stage, ""});
}

CriterionGraph build_graph_from_tree(const schema::CriterionNode& root,
                                     const std::string& activity_id) {
    CriterionGraph graph(activity_id);
    std::function<void(const schema::CriterionNode&)> add_vertices =
        [&](const schema::CriterionNode& node) {
            graph.add_vertex(node.criterion_id, &node);
            for (const auto& child : node.sub_criteria) add_vertices(child);
        };
    add_vertices(root);

    std::vector<Edge> hierarchy;
    std::function<void(const schema::CriterionNode&)> add_edges =
        [&](const schema::CriterionNode& node) {
            for (const auto& child : node.sub_criteria) {
                hierarchy.push_back(Edge{EdgeKind::Hierarchy, node.criterion_id,
                                         child.criterion_id, 1, ""});
                add_edges(child);
            }
        };
    add_edges(root);
    add_edges_from_stage(graph, 1, hierarchy);
    return graph;
}

CriterionGraph& add_edges_from_stage(CriterionGraph& graph, int stage_id,
                                     const std::vector<Edge>& edges) {
    if (stage_id < 1 || stage_id > 6) {
        throw IllegalKindForStage("stage_id must be in 1..6, got " + std::to_string(stage_id));
    }
    for (Edge e : edges) {
        if (!kind_legal_for_stage(e.kind, stage_id)) {
            throw IllegalKindForStage("edge kind " + to_string(e.kind) +
                                      " not legal for stage " + std::to_string(stage_id));
        }
        e.stage = stage_id;
        if (!graph.has_vertex(e.from) || !graph.has_vertex(e.to)) {
            graph.record_violation({"DanglingEdge", e.from + "->" + e.to,
                                    to_string(e.kind) + " edge endpoint missing"});
            continue;
        }
        graph.edges_.push_back(std::move(e));
    }
    return graph;
}

std::optional<std::string> implied_parent(const std::string& id,
                                          const std::set<std::string>& vertex_ids) {
    auto parsed = CriterionId::parse(id);
    if (!parsed || id == "ROOT") return std::nullopt;
    auto parts = parsed->parts;

    auto render_prefix = [&](std::size_t count) {
        CriterionId prefix;
        prefix.parts.assign(parts.begin(), parts.begin() + static_cast<long>(count));
        return prefix.render();
    };

    const auto& last = parts.back();
    if (last.kind == CriterionId::Part::Kind::Base) {
        return std::string("ROOT");
    }
    if (last.kind == CriterionId::Part::Kind::Anchor) {
        // Anchored paragraphs sit beside their anchor, under its parent.
        std::string anchor = render_prefix(parts.size() - 1);
        return implied_parent(anchor, vertex_ids);
    }
    std::string prefix = render_prefix(parts.size() - 1);
    if (last.kind == CriterionId::Part::Kind::Paren && last.value.size() == 1 &&
        std::islower(static_cast<unsigned char>(last.value[0]))) {
        // A sibling group container like "1(a-e)" captures members in range.
        for (char lo = 'a'; lo <= 'z'; ++lo) {
            for (char hi = static_cast<char>(lo + 1); hi <= 'z'; ++hi) {
                std::string container = prefix + "(" + std::string(1, lo) + "-" +
                                        std::string(1, hi) + ")";
                if (lo <= last.value[0] && last.value[0] <= hi && vertex_ids.count(container)) {
                    return container;
                }
            }
        }
    }
    return prefix;
}

CriterionGraph& reposition_misnested(CriterionGraph& graph) {
    std::set<std::string> ids;
    for (const auto& [id, _] : graph.vertices()) ids.insert(id);

    for (const auto& [id, _] : graph.vertices()) {
        if (id == "ROOT") continue;
        if (!CriterionId::parse(id)) {
            graph.record_violation({"UnparseableId", id, "identifier does not parse; left in place"});
            continue;
        }
        auto implied = implied_parent(id, ids);
        if (!implied || !ids.count(*implied)) continue;
        auto current = graph.hierarchy_parent(id);
        if (!current || *current != *implied) {
            graph.set_hierarchy_parent(id, *implied, 1);
        }
    }
    return graph;
}

namespace {

struct CycleInfo {
    std::set<std::string> on_cycle;
    std::vector<std::string> cycle_paths;  // rendered "A->B->A"
};

CycleInfo find_cycles(const std::map<std::string, std::vector<std::string>>& adjacency) {
    CycleInfo info;
    std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
    std::vector<std::string> path;

    std::function<void(const std::string&)> dfs = [&](const std::string& u) {
        color[u] = 1;
        path.push_back(u);
        auto it = adjacency.find(u);
        if (it != adjacency.end()) {
            for (const auto& v : it->second) {
                if (color[v] == 1) {
                    auto start = std::find(path.begin(), path.end(), v);
                    std::vector<std::string> cycle(start, path.end());
                    bool fresh = std::any_of(cycle.begin(), cycle.end(), [&](const std::string& n) {
                        return !info.on_cycle.count(n);
                    });
                    if (fresh) {
                        std::string rendered;
                        for (const auto& n : cycle) rendered += n + "->";
                        rendered += v;
                        info.cycle_paths.push_back(rendered);
                        info.on_cycle.insert(cycle.begin(), cycle.end());
                    }
                } else if (color[v] == 0) {
                    dfs(v);
                }
            }
        }
        color[u] = 2;
        path.pop_back();
    };

    for (const auto& [u, _] : adjacency) {
        if (color[u] == 0) dfs(u);
    }
    return info;
}

}  // namespace

ValidationReport validate(const CriterionGraph& graph, const schema::ParticipationFilter& filter) {
    ValidationReport report;
    report.violations = {};

    std::map<std::string, std::vector<std::string>> children;
    std::map<std::string, std::vector<std::string>> parents;
    for (const auto& e : graph.edges()) {
        if (e.kind == EdgeKind::Hierarchy) {
            children[e.from].push_back(e.to);
            parents[e.to].push_back(e.from);
        }
    }
    for (auto& [_, v] : children) std::sort(v.begin(), v.end());

    CycleInfo cycles = find_cycles(children);
    for (const auto& path : cycles.cycle_paths) {
        report.violations.push_back({"CycleViolation", path, "hierarchy edges form a cycle"});
    }

    // Root discovery: prefer an explicit ROOT vertex, else the unique
    // parentless vertex.
    std::string root;
    if (graph.has_vertex("ROOT")) {
        root = "ROOT";
    } else {
        for (const auto& [id, _] : graph.vertices()) {
            if (!parents.count(id)) {
                if (root.empty()) root = id;
            }
        }
    }

    for (const auto& [id, ps] : parents) {
        if (ps.size() >= 2 && !cycles.on_cycle.count(id)) {
            report.violations.push_back({"MultiParent", id,
                                         "node has " + std::to_string(ps.size()) +
                                             " hierarchy parents"});
        }
    }

    std::set<std::string> reachable;
    if (!root.empty()) {
        std::vector<std::string> stack = {root};
        while (!stack.empty()) {
            std::string u = stack.back();
            stack.pop_back();
            if (!reachable.insert(u).second) continue;
            auto it = children.find(u);
            if (it != children.end()) {
                for (const auto& v : it->second) stack.push_back(v);
            }
        }
    }
    for (const auto& [id, _] : graph.vertices()) {
        if (!reachable.count(id) && !cycles.on_cycle.count(id)) {
            report.violations.push_back({"DisconnectedNode", id,
                                         "not reachable from " + (root.empty() ? "any root" : root) +
                                             " via hierarchy edges"});
        }
    }

    // Evaluation logic vs participating child count, per the Evaluation
    // Participation Rule. Nodes on a hierarchy cycle are excluded: the
    // cycle violation subsumes their child counts.
    for (const auto& [id, node] : graph.vertices()) {
        if (!node || cycles.on_cycle.count(id)) continue;
        int participating = 0;
        auto it = children.find(id);
        if (it != children.end()) {
            for (const auto& child_id : it->second) {
                const auto* child = graph.vertex(child_id);
                if (child && filter.participates(*child, *node)) ++participating;
            }
        }
        switch (node->evaluation_logic) {
            case schema::EvalLogic::Leaf:
                if (participating > 0) {
                    report.violations.push_back({"LeafWithChildren", id,
                                                 "LEAF with " + std::to_string(participating) +
                                                     " participating children"});
                }
                break;
            case schema::EvalLogic::And:
            case schema::EvalLogic::Or:
                if (participating < 2) {
                    report.violations.push_back(
                        {"LogicChildMismatch", id,
                         schema::to_string(node->evaluation_logic) + " with " +
                             std::to_string(participating) + " participating children"});
                }
                break;
            case schema::EvalLogic::NOfK:
                if (!node->n_required) {
                    report.violations.push_back({"MissingNRequired", id, "N_OF_K without n_required"});
                } else if (*node->n_required < 1 || *node->n_required > participating) {
                    report.violations.push_back(
                        {"NRequiredOutOfRange", id,
                         "n_required " + std::to_string(*node->n_required) + " outside [1, " +
                             std::to_string(participating) + "]"});
                }
                break;
        }
    }

    // Threshold inheritance must be acyclic.
    std::map<std::string, std::vector<std::string>> inherit_adj;
    for (const auto& e : graph.edges()) {
        if (e.kind == EdgeKind::InheritsThreshold) inherit_adj[e.from].push_back(e.to);
    }
    for (auto& [_, v] : inherit_adj) std::sort(v.begin(), v.end());
    CycleInfo inherit_cycles = find_cycles(inherit_adj);
    for (const auto& path : inherit_cycles.cycle_paths) {
        report.violations.push_back({"InheritanceCycle", path, "InheritsThreshold edges form a cycle"});
    }

    for (const auto& v : graph.insertion_violations()) report.violations.push_back(v);

    std::sort(report.violations.begin(), report.violations.end());
    report.violations.erase(std::unique(report.violations.begin(), report.violations.end()),
                            report.violations.end());
    return report;
}

std::string to_dot(const CriterionGraph& graph) {
    std::string out = "digraph criterion_graph {\n  rankdir=TB;\n  node [shape=box];\n";
    for (const auto& [id, node] : graph.vertices()) {
        std::string label = id;
        if (node) label += "\\n" + schema::to_string(node->evaluation_logic);
        out += "  \"" + id + "\" [label=\"" + label + "\"];\n";
    }
    static const std::map<EdgeKind, std::string> colors = {
        {EdgeKind::Hierarchy, "black"},        {EdgeKind::GroupMember, "blue"},
        {EdgeKind::InheritsThreshold, "purple"}, {EdgeKind::References, "darkgreen"},
        {EdgeKind::DependsOn, "orange"},       {EdgeKind::Corrects, "red"},
    };
    for (const auto& e : graph.edges()) {
        out += "  \"" + e.from + "\" -> \"" + e.to + "\" [color=" + colors.at(e.kind) +
               ", label=\"" + to_string(e.kind) + "\"];\n";
    }
    out += "}\n";
    return out;
}

}  // namespace critex::graph
