#include "casegraph/visibility.hpp"

namespace casegraph {

LineageOracle LineageOracle::always() {
  return {[](const ObjectId&) { return true; }, [](const RelationshipId&) { return true; }};
}

bool visible_to(Credibility credibility, const std::optional<UserId>& author, const UserId& viewer) {
  return credibility != Credibility::Assumption || (author && *author == viewer);
}

namespace {

AttributeMap visible_attributes(const AttributeMap& attributes, Credibility owner, const UserId& viewer) {
  AttributeMap out;
  for (const auto& [key, attr] : attributes) {
    if (visible_to(effective_credibility(attr, owner), attr.author, viewer)) out.emplace(key, attr);
  }
  return out;
}

}  // namespace

Payload filter_visible(const Payload& payload, const UserId& viewer, const LineageOracle& lineage) {
  Payload out;
  for (const auto& [id, object] : payload.objects) {
    if (object.credibility == Credibility::Assumption) {
      if (!visible_to(object.credibility, object.author, viewer) || !lineage.object_in_lineage(id)) continue;
    }
    EntityObject copy = object;
    copy.attributes = visible_attributes(object.attributes, object.credibility, viewer);
    out.objects.emplace(id, std::move(copy));
  }
  for (const auto& [id, rel] : payload.relationships) {
    if (!out.objects.contains(rel.source) || !out.objects.contains(rel.target)) continue;
    if (rel.credibility == Credibility::Assumption) {
      if (!visible_to(rel.credibility, rel.author, viewer) || !lineage.relationship_in_lineage(id)) continue;
    }
    Relationship copy = rel;
    copy.attributes = visible_attributes(rel.attributes, rel.credibility, viewer);
    out.relationships.emplace(id, std::move(copy));
  }
  for (const auto& [gid, group] : payload.groups) {
    Group copy = group;
    copy.members.clear();
    for (const auto& m : group.members) {
      if (out.objects.contains(m)) copy.members.insert(m);
    }
    if (!copy.members.empty()) out.groups.emplace(gid, std::move(copy));
  }
  for (const auto& [id, visual] : payload.visuals) {
    if (!out.objects.contains(id)) continue;
    NodeVisual copy = visual;
    if (copy.group && !out.groups.contains(*copy.group)) copy.group.reset();
    out.visuals.emplace(id, copy);
  }
  return out;
}

RenderHints render_hints(const EntityObject& object) {
  return {dot_count(object.credibility), object.user_defined()};
}

RenderHints render_hints(const Relationship& rel) { return {dot_count(rel.credibility), rel.user_defined()}; }

}  // namespace casegraph
