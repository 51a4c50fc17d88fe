#include "casegraph/codec.hpp"

#include <array>
#include <cmath>

#include <openssl/evp.h>

#include "casegraph/error.hpp"

namespace casegraph {

std::string canonical_dump(const json& value) { return value.dump(); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// schema helpers
// ---------------------------------------------------------------------------

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(ErrorCode::SchemaViolation, path + ": expected object");
}

void require_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(ErrorCode::SchemaViolation, path + ": expected array");
}

const json& require(const json& j, const char* key, const std::string& path) {
  require_object(j, path);
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::SchemaViolation, path + "." + key + ": missing");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) fail(ErrorCode::SchemaViolation, path + "." + key + ": expected string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key, const std::string& path, const std::string& fallback) {
  require_object(j, path);
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) fail(ErrorCode::SchemaViolation, path + "." + key + ": expected string");
  return it->get<std::string>();
}

bool optional_bool(const json& j, const char* key, const std::string& path, bool fallback) {
  require_object(j, path);
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) fail(ErrorCode::SchemaViolation, path + "." + key + ": expected boolean");
  return it->get<bool>();
}

namespace {

double require_finite(const json& v, const std::string& path) {
  if (!v.is_number()) fail(ErrorCode::SchemaViolation, path + ": expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(ErrorCode::SchemaViolation, path + ": non-finite number");
  return d;
}

Credibility credibility_field(const json& j, const std::string& path) {
  const json& v = require(j, "credibility", path);
  if (!v.is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".credibility: expected integer");
  const int level = v.get<int>();
  if (level < 1 || level > 3) fail(ErrorCode::SchemaViolation, path + ".credibility: out of range");
  return static_cast<Credibility>(level);
}

void put_provenance(json& j, Credibility credibility, const std::optional<EvaluationCode>& evaluation,
                    const std::optional<UserId>& author, const std::optional<DatasetId>& source) {
  j["credibility"] = level_number(credibility);
  if (evaluation) j["eval"] = evaluation->str();
  if (author) j["author"] = author->str();
  if (source) j["sourceDataset"] = source->str();
}

template <class T>
void read_provenance(T& element, const json& j, const std::string& path) {
  element.credibility = credibility_field(j, path);
  if (auto code = optional_string(j, "eval", path); !code.empty()) element.evaluation = EvaluationCode::parse(code);
  if (auto author = optional_string(j, "author", path); !author.empty()) element.author = UserId(author);
  if (auto src = optional_string(j, "sourceDataset", path); !src.empty()) element.source_dataset = DatasetId(src);
}

json attributes_to_json(const AttributeMap& attributes) {
  json out = json::object();
  for (const auto& [key, attr] : attributes) out[key] = to_json(attr);
  return out;
}

AttributeMap attributes_from_json(const json& j, const std::string& path) {
  AttributeMap out;
  auto it = j.find("attributes");
  if (it == j.end()) return out;
  require_object(*it, path + ".attributes");
  for (const auto& [key, value] : it->items()) {
    out.emplace(key, attribute_from_json(value, path + ".attributes." + key));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// values and elements
// ---------------------------------------------------------------------------

json to_json(const Value& value) {
  return std::visit(
      [](const auto& v) -> json {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::string>) return {{"type", "text"}, {"value", v}};
        else if constexpr (std::is_same_v<V, double>) return {{"type", "number"}, {"value", v}};
        else return {{"type", "date"}, {"value", v.iso}};
      },
      value);
}

Value value_from_json(const json& j, const std::string& path) {
  const std::string type = require_string(j, "type", path);
  const json& v = require(j, "value", path);
  if (type == "text") {
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, path + ".value: expected string");
    return v.get<std::string>();
  }
  if (type == "number") return require_finite(v, path + ".value");
  if (type == "date") {
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, path + ".value: expected date string");
    return Date{v.get<std::string>()};
  }
  fail(ErrorCode::SchemaViolation, path + ".type: unknown value type '" + type + "'");
}

json to_json(const AttributeValue& attr) {
  json j = to_json(attr.value);
  j["credibility"] = level_number(attr.credibility);
  if (attr.author) j["author"] = attr.author->str();
  return j;
}

AttributeValue attribute_from_json(const json& j, const std::string& path) {
  AttributeValue attr;
  attr.value = value_from_json(j, path);
  attr.credibility = credibility_field(j, path);
  if (auto author = optional_string(j, "author", path); !author.empty()) attr.author = UserId(author);
  return attr;
}

json to_json(const EntityObject& object) {
  json j = {{"kind", object.kind}, {"attributes", attributes_to_json(object.attributes)},
            {"placeholder", object.is_placeholder}};
  put_provenance(j, object.credibility, object.evaluation, object.author, object.source_dataset);
  return j;
}

EntityObject object_from_json(const ObjectId& id, const json& j, const std::string& path) {
  EntityObject object;
  object.id = id;
  object.kind = require_string(j, "kind", path);
  object.attributes = attributes_from_json(j, path);
  object.is_placeholder = optional_bool(j, "placeholder", path, false);
  read_provenance(object, j, path);
  return object;
}

json to_json(const Relationship& rel) {
  json j = {{"source", rel.source.str()},
            {"target", rel.target.str()},
            {"kind", rel.kind},
            {"directed", rel.directed},
            {"attributes", attributes_to_json(rel.attributes)}};
  put_provenance(j, rel.credibility, rel.evaluation, rel.author, rel.source_dataset);
  return j;
}

Relationship relationship_from_json(const RelationshipId& id, const json& j, const std::string& path) {
  Relationship rel;
  rel.id = id;
  rel.source = ObjectId(require_string(j, "source", path));
  rel.target = ObjectId(require_string(j, "target", path));
  rel.kind = require_string(j, "kind", path);
  rel.directed = optional_bool(j, "directed", path, true);
  rel.attributes = attributes_from_json(j, path);
  read_provenance(rel, j, path);
  return rel;
}

json to_json(const Group& group) {
  json members = json::array();
  for (const auto& m : group.members) members.push_back(m.str());
  json j = {{"name", group.name}, {"members", members}, {"collapsed", group.collapsed}};
  if (group.tag_color) j["tagColor"] = *group.tag_color;
  return j;
}

Group group_from_json(const GroupId& id, const json& j, const std::string& path) {
  Group group;
  group.id = id;
  group.name = require_string(j, "name", path);
  group.collapsed = optional_bool(j, "collapsed", path, false);
  if (auto color = optional_string(j, "tagColor", path); !color.empty()) group.tag_color = color;
  const json& members = require(j, "members", path);
  require_array(members, path + ".members");
  for (const auto& m : members) {
    if (!m.is_string()) fail(ErrorCode::SchemaViolation, path + ".members: expected strings");
    group.members.insert(ObjectId(m.get<std::string>()));
  }
  return group;
}

json to_json(const NodeVisual& visual) {
  json j = {{"position", json::array({visual.position.x, visual.position.y})},
            {"minimized", visual.minimized},
            {"focus", visual.focus}};
  if (visual.group) j["groupId"] = visual.group->str();
  return j;
}

NodeVisual visual_from_json(const ObjectId& id, const json& j, const std::string& path) {
  NodeVisual visual;
  visual.object_id = id;
  const json& pos = require(j, "position", path);
  if (!pos.is_array() || pos.size() != 2) fail(ErrorCode::SchemaViolation, path + ".position: expected [x,y]");
  visual.position = {require_finite(pos[0], path + ".position[0]"), require_finite(pos[1], path + ".position[1]")};
  visual.minimized = optional_bool(j, "minimized", path, false);
  visual.focus = optional_bool(j, "focus", path, false);
  if (auto g = optional_string(j, "groupId", path); !g.empty()) visual.group = GroupId(g);
  return visual;
}

json to_json(const Payload& payload) {
  json objects = json::object(), rels = json::object(), groups = json::object(), visuals = json::object();
  for (const auto& [id, o] : payload.objects) objects[id.str()] = to_json(o);
  for (const auto& [id, r] : payload.relationships) rels[id.str()] = to_json(r);
  for (const auto& [id, g] : payload.groups) groups[id.str()] = to_json(g);
  for (const auto& [id, v] : payload.visuals) visuals[id.str()] = to_json(v);
  return {{"objects", objects}, {"relationships", rels}, {"groups", groups}, {"nodeVisuals", visuals}};
}

Payload payload_from_json(const json& j, const std::string& path) {
  Payload payload;
  auto section = [&](const char* key) -> const json& {
    const json& s = require(j, key, path);
    require_object(s, path + "." + key);
    return s;
  };
  for (const auto& [id, v] : section("objects").items()) {
    payload.objects.emplace(ObjectId(id), object_from_json(ObjectId(id), v, path + ".objects." + id));
  }
  for (const auto& [id, v] : section("relationships").items()) {
    payload.relationships.emplace(RelationshipId(id),
                                  relationship_from_json(RelationshipId(id), v, path + ".relationships." + id));
  }
  for (const auto& [id, v] : section("groups").items()) {
    payload.groups.emplace(GroupId(id), group_from_json(GroupId(id), v, path + ".groups." + id));
  }
  for (const auto& [id, v] : section("nodeVisuals").items()) {
    payload.visuals.emplace(ObjectId(id), visual_from_json(ObjectId(id), v, path + ".nodeVisuals." + id));
  }
  return payload;
}

json to_json(const Timestamp& ts) { return {{"seq", ts.seq}, {"wallMs", ts.wall_ms}}; }

Timestamp timestamp_from_json(const json& j, const std::string& path) {
  const json& seq = require(j, "seq", path);
  const json& wall = require(j, "wallMs", path);
  if (!seq.is_number_unsigned() && !seq.is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".seq: expected integer");
  if (!wall.is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".wallMs: expected integer");
  return Timestamp{seq.get<std::uint64_t>(), wall.get<std::int64_t>()};
}

json to_json(const PositionMap& positions) {
  json j = json::object();
  for (const auto& [id, p] : positions) j[id.str()] = json::array({p.x, p.y});
  return j;
}

PositionMap positions_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  PositionMap out;
  for (const auto& [id, p] : j.items()) {
    if (!p.is_array() || p.size() != 2) fail(ErrorCode::SchemaViolation, path + "." + id + ": expected [x,y]");
    out.emplace(ObjectId(id), Vec2{require_finite(p[0], path + "." + id), require_finite(p[1], path + "." + id)});
  }
  return out;
}

json to_json(const LayoutParams& params) {
  return {{"seed", params.seed},
          {"iterations", params.iterations},
          {"repulsionStrength", params.repulsion_strength},
          {"linkDistance", params.link_distance},
          {"centeringStrength", params.centering_strength},
          {"timestepDecay", params.timestep_decay},
          {"minSeparation", params.min_separation}};
}

LayoutParams layout_params_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  LayoutParams p;
  auto number = [&](const char* key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : require_finite(*it, path + "." + key);
  };
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".seed: expected integer");
    p.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("iterations"); it != j.end()) {
    if (!it->is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".iterations: expected integer");
    p.iterations = it->get<int>();
  }
  p.repulsion_strength = number("repulsionStrength", p.repulsion_strength);
  p.link_distance = number("linkDistance", p.link_distance);
  p.centering_strength = number("centeringStrength", p.centering_strength);
  p.timestep_decay = number("timestepDecay", p.timestep_decay);
  p.min_separation = number("minSeparation", p.min_separation);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(ErrorCode::SchemaViolation, path + ": " + e.detail());
  }
  return p;
}

std::string payload_hash(const Payload& payload) { return sha256_hex(canonical_dump(to_json(payload))); }

}  // namespace casegraph
