#pragma once

// StateDraft: the single-owner, mutable working copy from which an analysis
// state is committed. All analyst edits (user data, credibility-stamped
// attributes, groups, visual flags) happen here; committed states are never
// touched.

#include <atomic>
#include <memory>
#include <set>
#include <vector>

#include "casegraph/layout.hpp"
#include "casegraph/model.hpp"

namespace casegraph {

/// Document-wide allocator for user-created element ids. Dataset ids may not
/// start with '~', so generated ids never collide with evidence.
class IdSource {
 public:
  explicit IdSource(std::uint64_t next = 1) : next_(next) {}

  ObjectId next_object() { return ObjectId("~o" + std::to_string(next_++)); }
  RelationshipId next_relationship() { return RelationshipId("~r" + std::to_string(next_++)); }
  GroupId next_group() { return GroupId("~g" + std::to_string(next_++)); }
  std::uint64_t peek() const noexcept { return next_.load(); }

 private:
  std::atomic<std::uint64_t> next_;
};

/// A credibility change of a user-created object, advertised to every
/// branch and collaborator of a document. Never applied to committed states.
struct KnowledgeEvent {
  EventId id;
  ObjectId object;
  Credibility from = Credibility::Assumption;
  Credibility to = Credibility::Knowledge;
  UserId author;
  Timestamp timestamp;
  EntityObject object_after;

  friend bool operator==(const KnowledgeEvent&, const KnowledgeEvent&) = default;
};

struct VisualChange {
  enum class Kind { Minimize, Restore, Focus, Unfocus, Move };
  Kind kind = Kind::Restore;
  Vec2 position{};

  static VisualChange minimize() { return {Kind::Minimize, {}}; }
  static VisualChange restore() { return {Kind::Restore, {}}; }
  static VisualChange focus() { return {Kind::Focus, {}}; }
  static VisualChange unfocus() { return {Kind::Unfocus, {}}; }
  static VisualChange move(Vec2 to) { return {Kind::Move, to}; }
};

class StateDraft {
 public:
  StateDraft(DocumentId document, BranchId branch, StateId base, UserId owner, Payload payload,
             std::shared_ptr<IdSource> ids, LayoutParams layout);

  const DocumentId& document() const noexcept { return document_; }
  const BranchId& branch() const noexcept { return branch_; }
  const StateId& base() const noexcept { return base_; }
  const UserId& owner() const noexcept { return owner_; }
  const Payload& payload() const noexcept { return payload_; }
  bool closed() const noexcept { return closed_; }
  const std::set<EventId>& incorporated_events() const noexcept { return incorporated_; }
  const std::set<ObjectId>& pending_placement() const noexcept { return pending_placement_; }

  /// User data only (Knowledge or Assumption); kind "placeholder" creates a
  /// placeholder object. Attributes inherit the object's level and author.
  ObjectId create_object(const std::string& kind, const std::map<std::string, Value>& attributes,
                         Credibility credibility, const UserId& author);

  RelationshipId create_relationship(const ObjectId& source, const ObjectId& target, const std::string& kind,
                                     bool directed, const std::map<std::string, Value>& attributes,
                                     Credibility credibility, const UserId& author);

  void set_attribute(const ObjectId& object, const std::string& key, const Value& value, Credibility credibility,
                     const UserId& author);

  /// Removes a user-created object and its incident relationships.
  void delete_object(const ObjectId& object, const UserId& author);
  void delete_relationship(const RelationshipId& rel, const UserId& author);

  /// Hides an evidence object (and incident relationships) from this state.
  void exclude_evidence(const ObjectId& object, const UserId& author);

  /// Adds or refreshes evidence elements; relationships need both endpoints.
  /// New objects are placed next to their neighbours at the next settle.
  void include_evidence(const std::vector<EntityObject>& objects, const std::vector<Relationship>& relationships,
                        const UserId& author);

  GroupId group_nodes(const std::vector<ObjectId>& nodes, const std::string& name,
                      const std::optional<std::string>& tag_color, const UserId& author);
  void ungroup(const GroupId& group, const UserId& author);
  void set_group_collapsed(const GroupId& group, bool collapsed, const UserId& author);

  void set_node_visual(const ObjectId& object, const VisualChange& change, const UserId& author);

  /// Full force layout of the owner's visible graph. Other nodes keep
  /// their positions.
  void relayout(const LayoutParams& params, RelayoutRequest request, const UserId& author);

  /// Applies a promotion/demotion to this draft: updates the level of the
  /// object if present, or brings in a newly shared knowledge object.
  void incorporate_event(const KnowledgeEvent& event, const UserId& author);

  /// Positions nodes still waiting for placement via incremental_place.
  void settle_layout();

  /// Called by the owning document on commit.
  void close() noexcept { closed_ = true; }

  /// Mutable access for the document's commit pipeline only.
  Payload& payload_for_commit() noexcept { return payload_; }

 private:
  void check_open(const UserId& author) const;
  EntityObject& visible_object(const ObjectId& id);
  void add_visual(const ObjectId& id);
  void remove_object_internal(const ObjectId& id);

  DocumentId document_;
  BranchId branch_;
  StateId base_;
  UserId owner_;
  Payload payload_;
  std::shared_ptr<IdSource> ids_;
  LayoutParams layout_;
  bool closed_ = false;
  std::set<EventId> incorporated_;
  std::set<ObjectId> pending_placement_;
};

}  // namespace casegraph
