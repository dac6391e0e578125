#pragma once

#include <set>
#include <string>
#include <vector>

#include "critex/schema.hpp"

namespace critex::schema {

struct Violation {
    std::string code;          // e.g. CategoryThresholdMismatch
    std::string criterion_id;  // locus node
    std::string field;         // offending field, may be empty
    std::string message;
    bool operator==(const Violation&) const = default;
    auto operator<=>(const Violation&) const = default;
};

/// Evaluation Participation Rule. A child is excluded from its parent's
/// child count when it is newly ancillary relative to the parent: it adds
/// an excluded tag the parent does not carry, or its identifier adds a
/// semantic-anchor suffix (".Verification", ".BackgroundInformation", ...)
/// beyond the parent's. Within an ancillary subtree children therefore
/// count normally; exclusion applies at the boundary only.
struct ParticipationFilter {
    std::set<Tag> excluded_tags = {Tag::BackgroundInformation};
    bool exclude_anchor_suffixes = true;

    bool participates(const CriterionNode& child, const CriterionNode& parent) const;
};

/// Number of semantic-anchor segments (".Verification" etc.) in an id.
int anchor_suffix_depth(const std::string& criterion_id);

/// Cross-field consistency checks for one node and its descendants:
/// category/threshold agreement, logic vs participating child count,
/// n_required bounds, nullability and single-item-logic rules, the
/// footnote Legal Reference rule. Violations are data, not failures.
std::vector<Violation> validate_node(const CriterionNode& node,
                                     const ParticipationFilter& filter = {});

/// Nullifies complex objects with no meaningful content, drops logic on
/// single-item groups, strips enrichment detail fields unless retrieved.
/// Idempotent; recurses through all descendants.
CriterionNode normalize_node(CriterionNode node);

}  // namespace critex::schema
