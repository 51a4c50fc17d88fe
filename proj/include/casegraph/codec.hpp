#pragma once

// Canonical JSON encoding of model values. Keys are sorted and no
// insignificant whitespace is emitted, so the byte stream is stable and
// suitable for content hashing.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "casegraph/layout.hpp"
#include "casegraph/model.hpp"

namespace casegraph {

using json = nlohmann::json;

/// UTF-8, sorted keys, compact separators.
std::string canonical_dump(const json& value);

/// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

json to_json(const Value& value);
Value value_from_json(const json& j, const std::string& path);

json to_json(const AttributeValue& attr);
AttributeValue attribute_from_json(const json& j, const std::string& path);

json to_json(const EntityObject& object);
EntityObject object_from_json(const ObjectId& id, const json& j, const std::string& path);

json to_json(const Relationship& rel);
Relationship relationship_from_json(const RelationshipId& id, const json& j, const std::string& path);

json to_json(const Group& group);
Group group_from_json(const GroupId& id, const json& j, const std::string& path);

json to_json(const NodeVisual& visual);
NodeVisual visual_from_json(const ObjectId& id, const json& j, const std::string& path);

json to_json(const Payload& payload);
Payload payload_from_json(const json& j, const std::string& path = "payload");

json to_json(const Timestamp& ts);
Timestamp timestamp_from_json(const json& j, const std::string& path);

json to_json(const PositionMap& positions);
PositionMap positions_from_json(const json& j, const std::string& path);

json to_json(const LayoutParams& params);
LayoutParams layout_params_from_json(const json& j, const std::string& path);

/// SHA-256 over the canonical payload serialization.
std::string payload_hash(const Payload& payload);

// Small schema helpers shared by the file-format readers. All throw
// SchemaViolation with the offending path.
const json& require(const json& j, const char* key, const std::string& path);
std::string require_string(const json& j, const char* key, const std::string& path);
std::string optional_string(const json& j, const char* key, const std::string& path,
                            const std::string& fallback = {});
bool optional_bool(const json& j, const char* key, const std::string& path, bool fallback);
void require_object(const json& j, const std::string& path);
void require_array(const json& j, const std::string& path);

}  // namespace casegraph
