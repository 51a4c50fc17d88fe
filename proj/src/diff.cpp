#include "casegraph/diff.hpp"

#include "casegraph/error.hpp"

namespace casegraph {

namespace {

template <class Map>
void partition(const Map& a, const Map& b, ElementRef::Kind kind, DiffResult& out) {
  for (const auto& [id, element] : a) {
    const ElementRef ref{kind, id.str()};
    auto it = b.find(id);
    if (it == b.end()) {
      out.only_a.insert(ref);
    } else if (it->second == element) {
      out.equal.insert(ref);
    } else {
      out.conflicting.insert(ref);
    }
  }
  for (const auto& [id, _] : b) {
    if (!a.contains(id)) out.only_b.insert(ElementRef{kind, id.str()});
  }
}

// Group content under a name, independent of per-state group ids.
using GroupSignature = std::vector<std::tuple<std::set<ObjectId>, std::optional<std::string>, bool>>;

std::map<std::string, GroupSignature> groups_by_name(const Payload& p) {
  std::map<std::string, GroupSignature> out;
  for (const auto& [_, g] : p.groups) out[g.name].emplace_back(g.members, g.tag_color, g.collapsed);
  for (auto& [_, sig] : out) std::sort(sig.begin(), sig.end());
  return out;
}

}  // namespace

DiffResult diff_payloads(const Payload& a, const Payload& b) {
  DiffResult out;
  partition(a.objects, b.objects, ElementRef::Kind::Object, out);
  partition(a.relationships, b.relationships, ElementRef::Kind::Relationship, out);

  const auto ga = groups_by_name(a), gb = groups_by_name(b);
  for (const auto& [name, sig] : ga) {
    auto it = gb.find(name);
    if (it == gb.end()) out.groups.only_a.insert(name);
    else if (it->second == sig) out.groups.equal.insert(name);
    else out.groups.conflicting.insert(name);
  }
  for (const auto& [name, _] : gb) {
    if (!ga.contains(name)) out.groups.only_b.insert(name);
  }

  for (const auto& [id, va] : a.visuals) {
    auto it = b.visuals.find(id);
    if (it == b.visuals.end()) continue;
    const NodeVisual& vb = it->second;
    if (va.position != vb.position || va.minimized != vb.minimized || va.focus != vb.focus) {
      out.visuals.push_back({id, va, vb});
    }
  }
  return out;
}

DiffResult diff(const Document& doc, const StateId& a, const StateId& b, const UserId& viewer) {
  DiffResult out = diff_payloads(doc.resolve_view(a, viewer).payload, doc.resolve_view(b, viewer).payload);
  out.state_a = a;
  out.state_b = b;
  return out;
}

DiffResult diff(const Document& doc_a, const StateId& a, const Document& doc_b, const StateId& b,
                const UserId& viewer) {
  if (doc_a.id() != doc_b.id()) {
    fail(ErrorCode::CrossDocumentDiff, "states belong to documents " + doc_a.id().str() + " and " + doc_b.id().str());
  }
  return diff(doc_a, a, b, viewer);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json ref_to_json(const ElementRef& ref) {
  return {{"kind", ref.kind == ElementRef::Kind::Object ? "object" : "relationship"}, {"id", ref.id}};
}

ElementRef ref_from_json(const json& j, const std::string& path) {
  const std::string kind = require_string(j, "kind", path);
  ElementRef ref;
  if (kind == "object") ref.kind = ElementRef::Kind::Object;
  else if (kind == "relationship") ref.kind = ElementRef::Kind::Relationship;
  else fail(ErrorCode::SchemaViolation, path + ".kind: expected object|relationship");
  ref.id = require_string(j, "id", path);
  return ref;
}

json refs_to_json(const std::set<ElementRef>& refs) {
  json out = json::array();
  for (const auto& r : refs) out.push_back(ref_to_json(r));
  return out;
}

std::set<ElementRef> refs_from_json(const json& j, const char* key, const std::string& path) {
  std::set<ElementRef> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  require_array(*it, path + "." + key);
  for (const auto& r : *it) out.insert(ref_from_json(r, path + "." + key));
  return out;
}

json names_to_json(const std::set<std::string>& names) { return json(names); }

const char* side_name(Side s) { return s == Side::A ? "A" : "B"; }

Side side_from_json(const json& j, const std::string& path) {
  if (j == "A") return Side::A;
  if (j == "B") return Side::B;
  fail(ErrorCode::SchemaViolation, path + ": expected \"A\" or \"B\"");
}

}  // namespace

json to_json(const DiffResult& d) {
  json conflicts = json::array();
  for (const auto& r : d.conflicting) conflicts.push_back({{"a", ref_to_json(r)}, {"b", ref_to_json(r)}});
  json visuals = json::array();
  for (const auto& v : d.visuals) visuals.push_back({{"objectId", v.object.str()}, {"a", to_json(v.a)}, {"b", to_json(v.b)}});
  return {{"stateA", d.state_a.str()},
          {"stateB", d.state_b.str()},
          {"onlyA", refs_to_json(d.only_a)},
          {"equal", refs_to_json(d.equal)},
          {"onlyB", refs_to_json(d.only_b)},
          {"conflicts", conflicts},
          {"groups",
           {{"equal", names_to_json(d.groups.equal)},
            {"onlyA", names_to_json(d.groups.only_a)},
            {"onlyB", names_to_json(d.groups.only_b)},
            {"conflicting", names_to_json(d.groups.conflicting)}}},
          {"visual", visuals}};
}

json to_json(const MergeSelection& s) {
  json resolutions = json::array();
  for (const auto& [ref, side] : s.conflict_resolutions) {
    resolutions.push_back({{"ref", ref_to_json(ref)}, {"take", side_name(side)}});
  }
  json groups = json::array();
  for (const auto& [side, name] : s.chosen_groups) groups.push_back({{"side", side_name(side)}, {"name", name}});
  return {{"includeEqual", s.include_equal},
          {"chosenOnlyA", refs_to_json(s.chosen_only_a)},
          {"chosenOnlyB", refs_to_json(s.chosen_only_b)},
          {"conflictResolutions", resolutions},
          {"chosenGroups", groups},
          {"layoutSource", side_name(s.layout_source)}};
}

MergeSelection merge_selection_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  MergeSelection s;
  s.include_equal = optional_bool(j, "includeEqual", path, true);
  s.chosen_only_a = refs_from_json(j, "chosenOnlyA", path);
  s.chosen_only_b = refs_from_json(j, "chosenOnlyB", path);
  if (auto it = j.find("conflictResolutions"); it != j.end()) {
    require_array(*it, path + ".conflictResolutions");
    for (const auto& r : *it) {
      const std::string rp = path + ".conflictResolutions";
      s.conflict_resolutions[ref_from_json(require(r, "ref", rp), rp)] = side_from_json(require(r, "take", rp), rp + ".take");
    }
  }
  if (auto it = j.find("chosenGroups"); it != j.end()) {
    require_array(*it, path + ".chosenGroups");
    for (const auto& g : *it) {
      const std::string gp = path + ".chosenGroups";
      s.chosen_groups.emplace(side_from_json(require(g, "side", gp), gp + ".side"), require_string(g, "name", gp));
    }
  }
  if (auto it = j.find("layoutSource"); it != j.end()) s.layout_source = side_from_json(*it, path + ".layoutSource");
  return s;
}

json to_json(const MergeResult& r) {
  json dropped = json::array();
  for (const auto& id : r.dropped_relationships) dropped.push_back(id.str());
  json regrouped = json::array();
  for (const auto& id : r.regrouped_nodes) regrouped.push_back(id.str());
  return {{"stateId", r.state.str()},
          {"droppedRelationships", dropped},
          {"droppedGroups", r.dropped_groups},
          {"regroupedNodes", regrouped}};
}

}  // namespace casegraph
