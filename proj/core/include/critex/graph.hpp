#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "critex/schema.hpp"
#include "critex/validate.hpp"

namespace critex::graph {

enum class EdgeKind { Hierarchy, GroupMember, InheritsThreshold, References, DependsOn, Corrects };

std::string to_string(EdgeKind k);

struct Edge {
    EdgeKind kind = EdgeKind::Hierarchy;
    std::string from;
    std::string to;
    int stage = 0;            // originating pipeline stage
    std::string annotation;   // e.g. "[CORR FROM:1(b) TO:1(f) REASON:crossref]"
    bool operator==(const Edge&) const = default;
};

struct GraphViolation {
    std::string code;
    std::string locus;
    std::string detail;
    auto operator<=>(const GraphViolation&) const = default;
};

struct ValidationReport {
    std::vector<GraphViolation> violations;
    bool clean() const { return violations.empty(); }
};

struct IllegalKindForStage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structured criterion identifier: a base segment, parenthesized child
/// segments (single or "a-e" ranges) and semantic-anchor segments.
struct CriterionId {
    struct Part {
        enum class Kind { Base, Paren, Range, Anchor };
        Kind kind = Kind::Base;
        std::string value;       // "1", "f", "Verification"
        char range_lo = 0;       // Range only
        char range_hi = 0;
    };
    std::vector<Part> parts;

    static std::optional<CriterionId> parse(const std::string& id);
    std::string render() const;
};

/// Per-activity typed criterion graph. Vertices reference nodes owned by
/// the caller; the graph reorganizes structure and never mutates node
/// content.
class CriterionGraph {
  public:
    explicit CriterionGraph(std::string activity_id) : activity_id_(std::move(activity_id)) {}

    const std::string& activity_id() const { return activity_id_; }

    void add_vertex(const std::string& id, const schema::CriterionNode* node);
    bool has_vertex(const std::string& id) const { return vertices_.count(id) > 0; }
    const schema::CriterionNode* vertex(const std::string& id) const;
    const std::map<std::string, const schema::CriterionNode*>& vertices() const { return vertices_; }

    const std::vector<Edge>& edges() const { return edges_; }
    std::vector<Edge> edges_of_kind(EdgeKind kind) const;

    /// Hierarchy parent of a node, if any.
    std::optional<std::string> hierarchy_parent(const std::string& id) const;
    std::vector<std::string> hierarchy_children(const std::string& id) const;

    /// Replaces the hierarchy parent of `id` (used by repositioning).
    void set_hierarchy_parent(const std::string& id, const std::string& parent, int stage);

    const std::vector<GraphViolation>& insertion_violations() const { return insertion_violations_; }
    void record_violation(GraphViolation v) { insertion_violations_.push_back(std::move(v)); }

    friend CriterionGraph& add_edges_from_stage(CriterionGraph& graph, int stage_id,
                                                const std::vector<Edge>& edges);

  private:
    std::string activity_id_;
    std::map<std::string, const schema::CriterionNode*> vertices_;
    std::vector<Edge> edges_;
    std::vector<GraphViolation> insertion_violations_;
};

/// Registers every node of a rooted tree as a vertex and inserts the
/// nesting as stage-1 Hierarchy edges.
CriterionGraph build_graph_from_tree(const schema::CriterionNode& root,
                                     const std::string& activity_id);

/// Inserts edges after checking kind legality for the stage; an edge
/// whose endpoint is missing is rejected and recorded as DanglingEdge.
/// Throws IllegalKindForStage.
CriterionGraph& add_edges_from_stage(CriterionGraph& graph, int stage_id,
                                     const std::vector<Edge>& edges);

/// Parent implied by the identifier: "1(f)(a)" under "1(f)"; children of
/// a present group container "1(a-e)" attach under the container; anchored
/// ids ("1(f).Verification") attach as siblings of their anchor, i.e.
/// under the anchor's own implied parent; "1(f).Verification(b)" under
/// "1(f).Verification".
std::optional<std::string> implied_parent(const std::string& id,
                                          const std::set<std::string>& vertex_ids);

/// Moves each vertex under its id-implied parent. Unparseable ids are
/// left in place and recorded as UnparseableId violations.
CriterionGraph& reposition_misnested(CriterionGraph& graph);

/// Global structural validation: hierarchy forms a rooted tree, no
/// disconnected vertices, evaluation logic matches the participating
/// child count, no InheritsThreshold cycles, plus violations recorded at
/// insertion time. Deterministic and insertion-order independent.
ValidationReport validate(const CriterionGraph& graph,
                          const schema::ParticipationFilter& filter = {});

std::string to_dot(const CriterionGraph& graph);

}  // namespace critex::graph
