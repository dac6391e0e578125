#pragma once

#include <map>
#include <optional>
#include <string>

#include "critex/schema.hpp"

namespace critex::memory {

/// Per-activity shared semantic memory: three registries populated
/// incrementally across stages and included in later prompts. One
/// instance per activity; never shared between activities.
struct SharedMemory {
    struct ActivityMetadata {
        std::string name;
        std::string objective;
        std::string act;
        std::string section;
    };

    std::map<std::string, schema::Threshold> threshold_registry;
    std::map<std::string, std::string> crossref_map;  // cited id -> corrected id
    ActivityMetadata activity_metadata;

    void register_threshold(const std::string& criterion_id, schema::Threshold t) {
        threshold_registry[criterion_id] = std::move(t);
    }

    std::optional<schema::Threshold> lookup_threshold(const std::string& criterion_id) const {
        auto it = threshold_registry.find(criterion_id);
        if (it == threshold_registry.end()) return std::nullopt;
        return it->second;
    }

    /// Follows the correction map once (corrections do not chain).
    std::string resolve_crossref(const std::string& cited_id) const {
        auto it = crossref_map.find(cited_id);
        return it == crossref_map.end() ? cited_id : it->second;
    }
};

}  // namespace critex::memory
