#include "casegraph/draft.hpp"

#include <cmath>

#include "casegraph/error.hpp"
#include "casegraph/visibility.hpp"

namespace casegraph {

StateDraft::StateDraft(DocumentId document, BranchId branch, StateId base, UserId owner, Payload payload,
                       std::shared_ptr<IdSource> ids, LayoutParams layout)
    : document_(std::move(document)),
      branch_(std::move(branch)),
      base_(std::move(base)),
      owner_(std::move(owner)),
      payload_(std::move(payload)),
      ids_(std::move(ids)),
      layout_(layout) {}

void StateDraft::check_open(const UserId& author) const {
  if (closed_) fail(ErrorCode::DraftClosed, "draft on branch " + branch_.str() + " was already committed");
  if (author != owner_) fail(ErrorCode::NotAuthor, author.str() + " does not own this draft");
}

EntityObject& StateDraft::visible_object(const ObjectId& id) {
  auto it = payload_.objects.find(id);
  if (it == payload_.objects.end() || !visible_to(it->second.credibility, it->second.author, owner_)) {
    fail(ErrorCode::UnknownObject, "object " + id.str() + " not in draft");
  }
  return it->second;
}

void StateDraft::add_visual(const ObjectId& id) {
  // Provisional position; replaced by incremental placement in settle_layout().
  payload_.visuals[id] = NodeVisual{id, {}, false, false, std::nullopt};
  pending_placement_.insert(id);
}

namespace {

AttributeMap stamp(const std::map<std::string, Value>& values, Credibility credibility, const UserId& author) {
  AttributeMap out;
  for (const auto& [k, v] : values) out.emplace(k, AttributeValue{v, credibility, author});
  return out;
}

void require_user_level(Credibility credibility) {
  if (credibility == Credibility::Evidence) {
    fail(ErrorCode::CredibilityViolation, "evidence enters only through dataset ingestion");
  }
}

}  // namespace

ObjectId StateDraft::create_object(const std::string& kind, const std::map<std::string, Value>& attributes,
                                   Credibility credibility, const UserId& author) {
  check_open(author);
  require_user_level(credibility);
  EntityObject object;
  object.id = ids_->next_object();
  object.kind = kind;
  object.attributes = stamp(attributes, credibility, author);
  object.credibility = credibility;
  object.author = author;
  object.is_placeholder = kind == "placeholder";
  const ObjectId id = object.id;
  payload_.objects.emplace(id, std::move(object));
  add_visual(id);
  return id;
}

RelationshipId StateDraft::create_relationship(const ObjectId& source, const ObjectId& target,
                                               const std::string& kind, bool directed,
                                               const std::map<std::string, Value>& attributes,
                                               Credibility credibility, const UserId& author) {
  check_open(author);
  require_user_level(credibility);
  visible_object(source);
  visible_object(target);
  Relationship rel;
  rel.id = ids_->next_relationship();
  rel.source = source;
  rel.target = target;
  rel.kind = kind;
  rel.directed = directed;
  rel.attributes = stamp(attributes, credibility, author);
  rel.credibility = credibility;
  rel.author = author;
  const RelationshipId id = rel.id;
  payload_.relationships.emplace(id, std::move(rel));
  return id;
}

void StateDraft::set_attribute(const ObjectId& object_id, const std::string& key, const Value& value,
                               Credibility credibility, const UserId& author) {
  check_open(author);
  EntityObject& object = visible_object(object_id);
  require_user_level(credibility);
  if (level_number(credibility) < level_number(object.credibility)) {
    fail(ErrorCode::CredibilityViolation, "attribute '" + key + "' cannot be more trusted than object " +
                                              object_id.str() + " (" + std::string(to_string(object.credibility)) + ")");
  }
  if (auto it = object.attributes.find(key); it != object.attributes.end()) {
    const AttributeValue& current = it->second;
    if (current.credibility == Credibility::Evidence) {
      fail(ErrorCode::AttributeLocked, "attribute '" + key + "' of " + object_id.str() + " comes from the central database");
    }
    if (current.credibility == Credibility::Assumption && current.author != author) {
      fail(ErrorCode::AttributeLocked, "attribute '" + key + "' is another analyst's assumption");
    }
  }
  object.attributes[key] = AttributeValue{value, credibility, author};
}

void StateDraft::remove_object_internal(const ObjectId& id) {
  payload_.objects.erase(id);
  payload_.visuals.erase(id);
  pending_placement_.erase(id);
  drop_dangling_relationships(payload_);
  for (auto it = payload_.groups.begin(); it != payload_.groups.end();) {
    it->second.members.erase(id);
    if (it->second.members.empty()) {
      it = payload_.groups.erase(it);
    } else {
      ++it;
    }
  }
}

void StateDraft::delete_object(const ObjectId& object_id, const UserId& author) {
  check_open(author);
  const EntityObject& object = visible_object(object_id);
  if (!object.user_defined()) {
    fail(ErrorCode::CredibilityViolation, "evidence object " + object_id.str() + " can be excluded but not deleted");
  }
  remove_object_internal(object_id);
}

void StateDraft::delete_relationship(const RelationshipId& rel_id, const UserId& author) {
  check_open(author);
  auto it = payload_.relationships.find(rel_id);
  if (it == payload_.relationships.end() || !visible_to(it->second.credibility, it->second.author, owner_)) {
    fail(ErrorCode::UnknownObject, "relationship " + rel_id.str() + " not in draft");
  }
  if (!it->second.user_defined()) {
    fail(ErrorCode::CredibilityViolation, "evidence relationship " + rel_id.str() + " cannot be deleted");
  }
  payload_.relationships.erase(it);
}

void StateDraft::exclude_evidence(const ObjectId& object_id, const UserId& author) {
  check_open(author);
  const EntityObject& object = visible_object(object_id);
  if (object.user_defined()) {
    fail(ErrorCode::CredibilityViolation, "object " + object_id.str() + " is user data; delete it instead");
  }
  remove_object_internal(object_id);
}

void StateDraft::include_evidence(const std::vector<EntityObject>& objects,
                                  const std::vector<Relationship>& relationships, const UserId& author) {
  check_open(author);
  for (const auto& object : objects) {
    if (object.credibility != Credibility::Evidence) {
      fail(ErrorCode::CredibilityViolation, "include_evidence given user object " + object.id.str());
    }
  }
  for (const auto& object : objects) {
    auto it = payload_.objects.find(object.id);
    if (it == payload_.objects.end()) {
      payload_.objects.emplace(object.id, object);
      add_visual(object.id);
    } else {
      // Keep analyst attributes layered over refreshed evidence.
      EntityObject merged = object;
      for (const auto& [k, attr] : it->second.attributes) {
        if (attr.credibility != Credibility::Evidence && !merged.attributes.contains(k)) merged.attributes.emplace(k, attr);
      }
      it->second = std::move(merged);
    }
  }
  for (const auto& rel : relationships) {
    if (rel.credibility != Credibility::Evidence) {
      fail(ErrorCode::CredibilityViolation, "include_evidence given user relationship " + rel.id.str());
    }
    if (payload_.objects.contains(rel.source) && payload_.objects.contains(rel.target)) {
      payload_.relationships[rel.id] = rel;
    }
  }
}

GroupId StateDraft::group_nodes(const std::vector<ObjectId>& nodes, const std::string& name,
                                const std::optional<std::string>& tag_color, const UserId& author) {
  check_open(author);
  if (nodes.empty()) fail(ErrorCode::EmptySelection, "group needs at least one node");
  std::set<ObjectId> members;
  for (const auto& id : nodes) {
    visible_object(id);
    if (payload_.visuals.at(id).group || !members.insert(id).second) {
      fail(ErrorCode::AlreadyGrouped, "node " + id.str() + " already belongs to a group");
    }
  }
  Group group;
  group.id = ids_->next_group();
  group.name = name;
  group.tag_color = tag_color;
  group.members = std::move(members);
  group.collapsed = false;
  for (const auto& id : group.members) payload_.visuals.at(id).group = group.id;
  const GroupId gid = group.id;
  payload_.groups.emplace(gid, std::move(group));
  return gid;
}

void StateDraft::ungroup(const GroupId& group_id, const UserId& author) {
  check_open(author);
  auto it = payload_.groups.find(group_id);
  if (it == payload_.groups.end()) fail(ErrorCode::UnknownGroup, "group " + group_id.str() + " not in draft");
  for (const auto& m : it->second.members) payload_.visuals.at(m).group.reset();
  payload_.groups.erase(it);
}

void StateDraft::set_group_collapsed(const GroupId& group_id, bool collapsed, const UserId& author) {
  check_open(author);
  auto it = payload_.groups.find(group_id);
  if (it == payload_.groups.end()) fail(ErrorCode::UnknownGroup, "group " + group_id.str() + " not in draft");
  it->second.collapsed = collapsed;
}

void StateDraft::set_node_visual(const ObjectId& object_id, const VisualChange& change, const UserId& author) {
  check_open(author);
  visible_object(object_id);
  NodeVisual& visual = payload_.visuals.at(object_id);
  switch (change.kind) {
    case VisualChange::Kind::Minimize:
      visual.minimized = true;
      visual.focus = false;
      break;
    case VisualChange::Kind::Restore:
      visual.minimized = false;
      break;
    case VisualChange::Kind::Focus:
      if (visual.minimized) fail(ErrorCode::ConflictingFlags, "node " + object_id.str() + " is minimized");
      visual.focus = true;
      break;
    case VisualChange::Kind::Unfocus:
      visual.focus = false;
      break;
    case VisualChange::Kind::Move:
      if (!std::isfinite(change.position.x) || !std::isfinite(change.position.y)) {
        fail(ErrorCode::InvariantViolation, "non-finite position");
      }
      visual.position = change.position;
      pending_placement_.erase(object_id);
      break;
  }
}

void StateDraft::relayout(const LayoutParams& params, RelayoutRequest request, const UserId& author) {
  check_open(author);
  const Payload visible = filter_visible(payload_, owner_, LineageOracle::always());
  const PositionMap positions = casegraph::relayout(layout_graph_of(visible), params, request);
  for (const auto& [id, p] : positions) {
    payload_.visuals.at(id).position = p;
    pending_placement_.erase(id);
  }
}

void StateDraft::incorporate_event(const KnowledgeEvent& event, const UserId& author) {
  check_open(author);
  auto it = payload_.objects.find(event.object);
  if (it != payload_.objects.end()) {
    it->second.credibility = event.to;
  } else if (event.to == Credibility::Knowledge) {
    EntityObject object = event.object_after;
    object.credibility = event.to;
    payload_.objects.emplace(object.id, object);
    add_visual(object.id);
  }
  incorporated_.insert(event.id);
}

void StateDraft::settle_layout() {
  if (pending_placement_.empty()) return;
  PositionMap existing;
  for (const auto& [id, visual] : payload_.visuals) {
    if (!pending_placement_.contains(id)) existing.emplace(id, visual.position);
  }
  const std::vector<ObjectId> fresh(pending_placement_.begin(), pending_placement_.end());
  const PositionMap placed = incremental_place(layout_graph_of(payload_), existing, fresh, layout_);
  for (const auto& [id, p] : placed) payload_.visuals.at(id).position = p;
  pending_placement_.clear();
}

}  // namespace casegraph
