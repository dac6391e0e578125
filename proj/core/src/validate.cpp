#include "critex/validate.hpp"

#include <algorithm>

namespace critex::schema {

namespace {

const char* kAnchorSuffixes[] = {".Verification", ".Methodology",          ".Commitment",
                                 ".Assessment",   ".Replacement",          ".BackgroundInformation"};

int count_participating(const CriterionNode& node, const ParticipationFilter& filter) {
    int n = 0;
    for (const auto& child : node.sub_criteria) {
        if (filter.participates(child, node)) ++n;
    }
    return n;
}

void validate_one(const CriterionNode& node, const ParticipationFilter& filter,
                  std::vector<Violation>& out) {
    const std::string& id = node.criterion_id;
    const bool has_quant = node.threshold && node.threshold->quantitative;

    if (node.category == Category::Quantitative && !has_quant) {
        out.push_back({"CategoryThresholdMismatch", id, "category",
                       "category is Quantitative but threshold.quantitative is null"});
    }
    if (node.category == Category::Qualitative && has_quant) {
        out.push_back({"CategoryThresholdMismatch", id, "category",
                       "category is Qualitative but a quantitative threshold is present"});
    }

    const int participating = count_participating(node, filter);
    switch (node.evaluation_logic) {
        case EvalLogic::Leaf:
            if (participating > 0) {
                out.push_back({"LeafWithChildren", id, "evaluation_logic",
                               "LEAF node has " + std::to_string(participating) +
                                   " participating children"});
            }
            break;
        case EvalLogic::And:
        case EvalLogic::Or:
            if (participating < 2) {
                out.push_back({"LogicChildMismatch", id, "evaluation_logic",
                               to_string(node.evaluation_logic) + " node has " +
                                   std::to_string(participating) + " participating children"});
            }
            break;
        case EvalLogic::NOfK:
            break;
    }

    if (node.evaluation_logic == EvalLogic::NOfK) {
        if (!node.n_required) {
            out.push_back({"MissingNRequired", id, "n_required", "N_OF_K node lacks n_required"});
        } else if (*node.n_required < 1 || *node.n_required > participating) {
            out.push_back({"NRequiredOutOfRange", id, "n_required",
                           "n_required " + std::to_string(*node.n_required) + " outside [1, " +
                               std::to_string(participating) + "]"});
        }
    } else if (node.n_required) {
        out.push_back({"UnexpectedNRequired", id, "n_required",
                       "n_required set on a non-N_OF_K node"});
    }

    if (node.threshold) {
        if (!node.threshold->quantitative && !node.threshold->temporal) {
            out.push_back({"EmptyThreshold", id, "threshold",
                           "threshold object carries no quantitative or temporal data"});
        }
        if (node.threshold->quantitative) {
            const auto& q = *node.threshold->quantitative;
            if (q.items.empty()) {
                out.push_back({"EmptyThreshold", id, "threshold/quantitative", "no items"});
            } else if (q.items.size() == 1 && q.logic) {
                out.push_back({"SingleItemLogic", id, "threshold/quantitative/logic",
                               "logic must be null with exactly one item"});
            } else if (q.items.size() >= 2 && !q.logic) {
                out.push_back({"MissingGroupLogic", id, "threshold/quantitative/logic",
                               "logic required with two or more items"});
            }
        }
        if (node.threshold->temporal) {
            const auto& t = *node.threshold->temporal;
            if (t.items.empty()) {
                out.push_back({"EmptyThreshold", id, "threshold/temporal", "no items"});
            } else if (t.items.size() == 1 && t.logic) {
                out.push_back({"SingleItemLogic", id, "threshold/temporal/logic",
                               "logic must be null with exactly one item"});
            } else if (t.items.size() >= 2 && !t.logic) {
                out.push_back({"MissingGroupLogic", id, "threshold/temporal/logic",
                               "logic required with two or more items"});
            }
        }
    }

    if (node.references) {
        const auto& r = *node.references;
        if (r.sources.empty()) {
            out.push_back({"EmptyReferences", id, "references", "sources must be non-empty"});
        } else if (r.sources.size() == 1 && r.logic) {
            out.push_back({"SingleItemLogic", id, "references/logic",
                           "logic must be null with exactly one source"});
        } else if (r.sources.size() >= 2 && !r.logic) {
            out.push_back({"MissingGroupLogic", id, "references/logic",
                           "logic required with two or more sources"});
        }
        for (const auto& s : r.sources) {
            if (s.enrichment && s.enrichment->status != EnrichStatus::Retrieved &&
                (!s.enrichment->summary.empty() || !s.enrichment->key_facts.empty() ||
                 !s.enrichment->thresholds.empty())) {
                out.push_back({"EnrichmentFieldsWithoutRetrieval", id, "references",
                               "enrichment detail present though status is not retrieved"});
            }
        }
    }

    if (node.dependencies) {
        const auto& d = *node.dependencies;
        if (d.clauses.empty()) {
            out.push_back({"EmptyDependencies", id, "dependencies", "clauses must be non-empty"});
        } else if (d.min_conditions_to_meet < 1 ||
                   d.min_conditions_to_meet > static_cast<int>(d.clauses.size())) {
            out.push_back({"MinConditionsOutOfRange", id, "dependencies/min_conditions_to_meet",
                           "must lie in [1, clause count]"});
        }
    }

    for (const auto& f : node.footnotes) {
        bool has_legal_act = std::any_of(f.items.begin(), f.items.end(), [](const FootnoteItem& item) {
            return item.kind == "EU Legal Act" || item.kind.find("Treaty") != std::string::npos;
        });
        bool claims_legal = std::find(f.categories.begin(), f.categories.end(), "Legal Reference") !=
                            f.categories.end();
        if (claims_legal && !has_legal_act) {
            out.push_back({"FootnoteCategoryMismatch", id, "footnotes",
                           "footnote " + f.id +
                               " claims Legal Reference without an EU Legal Act or treaty item"});
        }
        if (f.verbatim.empty()) {
            out.push_back({"EmptyFootnoteVerbatim", id, "footnotes",
                           "footnote " + f.id + " has empty verbatim text"});
        }
    }

    for (const auto& child : node.sub_criteria) validate_one(child, filter, out);
}

EnrichmentRecord normalize_enrichment(EnrichmentRecord e) {
    if (e.status != EnrichStatus::Retrieved) {
        e.summary.clear();
        e.key_facts.clear();
        e.thresholds.clear();
        e.confidence = 0;
    }
    return e;
}

}  // namespace

int anchor_suffix_depth(const std::string& criterion_id) {
    int depth = 0;
    for (const char* suffix : kAnchorSuffixes) {
        std::size_t pos = 0;
        while ((pos = criterion_id.find(suffix, pos)) != std::string::npos) {
            ++depth;
            pos += std::string(suffix).size();
        }
    }
    return depth;
}

bool ParticipationFilter::participates(const CriterionNode& child,
                                       const CriterionNode& parent) const {
    for (Tag t : child.tags) {
        if (excluded_tags.count(t) &&
            std::find(parent.tags.begin(), parent.tags.end(), t) == parent.tags.end()) {
            return false;
        }
    }
    if (exclude_anchor_suffixes &&
        anchor_suffix_depth(child.criterion_id) > anchor_suffix_depth(parent.criterion_id)) {
        return false;
    }
    return true;
}

std::vector<Violation> validate_node(const CriterionNode& node, const ParticipationFilter& filter) {
    std::vector<Violation> out;
    validate_one(node, filter, out);
    std::sort(out.begin(), out.end());
    return out;
}

CriterionNode normalize_node(CriterionNode node) {
    if (node.threshold) {
        auto& t = *node.threshold;
        if (t.quantitative) {
            if (t.quantitative->items.empty()) {
                t.quantitative.reset();
            } else if (t.quantitative->items.size() == 1) {
                t.quantitative->logic.reset();
            }
        }
        if (t.temporal) {
            if (t.temporal->items.empty()) {
                t.temporal.reset();
            } else if (t.temporal->items.size() == 1) {
                t.temporal->logic.reset();
            }
        }
        if (!t.quantitative && !t.temporal) node.threshold.reset();
    }
    if (node.references) {
        auto& r = *node.references;
        if (r.sources.empty()) {
            node.references.reset();
        } else {
            if (r.sources.size() == 1) r.logic.reset();
            for (auto& s : r.sources) {
                if (s.enrichment) s.enrichment = normalize_enrichment(*s.enrichment);
            }
        }
    }
    if (node.dependencies && node.dependencies->clauses.empty()) node.dependencies.reset();
    for (auto& f : node.footnotes) {
        for (auto& item : f.items) {
            if (item.enrichment) item.enrichment = normalize_enrichment(*item.enrichment);
        }
    }
    for (auto& child : node.sub_criteria) child = normalize_node(std::move(child));
    return node;
}

}  // namespace critex::schema
