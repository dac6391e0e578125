#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

#include "critex/schema.hpp"

namespace critex::schema {

using json = nlohmann::ordered_json;

/// Shape error with a JSON-pointer-style path to the offending spot.
struct SchemaError : std::runtime_error {
    std::string path;
    SchemaError(std::string path_, const std::string& message)
        : std::runtime_error(path_ + ": " + message), path(std::move(path_)) {}
};

/// Emits a number without trailing zeros: integral values serialize as
/// JSON integers, so 10 and 10.0 produce identical bytes.
json canonical_number(double v);

/// Canonical JSON object for a node: fixed field order, explicit nulls
/// for empty complex objects, all keys always present.
json node_to_json(const CriterionNode& node);

json threshold_to_json(const Threshold& t);
Threshold threshold_from_json(const json& j, const std::string& path = "");
json references_to_json(const ReferenceSet& r);
json dependencies_to_json(const Dependencies& d);
json footnote_to_json(const Footnote& f);

/// Strict parse: all 13 fields required, unknown fields rejected, enums
/// closed. Throws SchemaError with the offending path.
CriterionNode node_from_json(const json& j, const std::string& path = "");

/// Canonical UTF-8 bytes (2-space indent, trailing newline).
std::string to_canonical_json(const CriterionNode& node);
CriterionNode from_canonical_json(const std::string& bytes);

json activity_to_json(const ActivityTree& tree);
ActivityTree activity_from_json(const json& j);
std::string activity_to_canonical_json(const ActivityTree& tree);
ActivityTree activity_from_canonical_json(const std::string& bytes);

}  // namespace critex::schema
