#pragma once

// Visualization documents: a root dataset image plus a non-linear DAG of
// immutable analysis states organised into branches, with log comments,
// credibility events and per-state annotations (report flag, staleness).

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "casegraph/draft.hpp"
#include "casegraph/layout.hpp"
#include "casegraph/model.hpp"
#include "casegraph/visibility.hpp"

namespace casegraph {

struct AnalysisState {
  StateId id;
  DocumentId document;
  std::vector<StateId> parents;  // 0 = root, 1 = commit, 2 = merge
  BranchId branch;
  UserId author;
  Timestamp timestamp;
  std::string message;
  Payload payload;
  std::string payload_hash;

  bool is_root() const noexcept { return parents.empty(); }
  bool is_merge() const noexcept { return parents.size() == 2; }
};

/// Identity of a state: content hash of payload combined with a hash of its
/// metadata, so an unchanged payload committed twice yields distinct states.
StateId compute_state_id(const DocumentId& document, const std::string& payload_hash,
                         const std::vector<StateId>& parents, const BranchId& branch, const UserId& author,
                         const Timestamp& timestamp, const std::string& message);

struct LogComment {
  CommentId id;
  BranchId branch;
  UserId author;
  Timestamp timestamp;
  std::string text;
};

struct BranchEntry {
  enum class Kind { State, Comment };
  Kind kind = Kind::State;
  std::string id;
  Timestamp timestamp;
};

struct Branch {
  BranchId id;
  std::string name;
  std::string hypothesis;
  StateId created_from;
  std::vector<BranchEntry> entries;
  UserId owner;
  bool active = true;
  std::set<EventId> handled_events;
};

/// Mutable, non-identity metadata kept beside an immutable state.
struct StateAnnotations {
  bool report_flag = false;
  std::vector<UpdateId> stale_reasons;
  std::string note;

  bool stale() const noexcept { return !stale_reasons.empty(); }
};

/// Read-only view of a state handed to a viewer.
struct Snapshot {
  std::shared_ptr<const AnalysisState> state;
  VisibleGraph graph;
  StateAnnotations annotations;
  /// Only the state's author may edit its annotations.
  bool editable = false;
};

class DocumentStore;

class Document {
 public:
  using Clock = std::function<std::int64_t()>;

  struct Meta {
    DocumentId id;
    std::string name;
    CaseId case_id;
    std::vector<DatasetId> initial_datasets;
    UserId created_by;
    Timestamp created_at;
    LayoutParams layout;
  };

  static Clock system_clock();

  /// Root state holds `root_payload`; a default branch "main" owned by the
  /// creator is anchored at it.
  static Document create(Meta meta, Payload root_payload, Clock clock = system_clock());

  Document(Document&&) noexcept = default;
  Document& operator=(Document&&) noexcept = default;

  // -- inspection -----------------------------------------------------------
  const Meta& meta() const noexcept { return meta_; }
  const DocumentId& id() const noexcept { return meta_.id; }
  const StateId& root() const noexcept { return root_; }
  bool has_state(const StateId& id) const noexcept { return dag_.contains(id); }
  /// Throws UnknownState, or CorruptStore for a state whose file was lost.
  const AnalysisState& state(const StateId& id) const;
  std::shared_ptr<const AnalysisState> state_ptr(const StateId& id) const;
  const std::vector<StateId>& parents(const StateId& id) const;
  /// All state ids in commit order.
  std::vector<StateId> state_ids() const;
  const std::set<StateId>& lost_states() const noexcept { return lost_; }
  const std::map<BranchId, Branch>& branches() const noexcept { return branches_; }
  const Branch& branch(const BranchId& id) const;
  std::optional<BranchId> find_branch(const std::string& name) const;
  /// Latest state entry of a branch, or its anchor if it has none.
  StateId tip(const BranchId& id) const;
  const std::map<CommentId, LogComment>& comments() const noexcept { return comments_; }
  const std::vector<KnowledgeEvent>& events() const noexcept { return events_; }
  const StateAnnotations& annotations(const StateId& id) const;
  std::vector<StateId> report_candidates() const;
  const std::set<UserId>& collaborators() const noexcept { return collaborators_; }
  std::shared_ptr<IdSource> ids() const noexcept { return ids_; }

  // -- provenance operations -----------------------------------------------
  BranchId create_branch(const std::string& name, const std::string& hypothesis, const StateId& from,
                         const UserId& owner);
  StateDraft open_draft(const BranchId& branch, const UserId& author) const;
  StateId commit_state(const BranchId& branch, StateDraft& draft, const std::string& message, const UserId& author);
  /// Appends a two-parent state; used by merge().
  StateId commit_merge(const BranchId& target, const StateId& a, const StateId& b, Payload payload,
                       const std::string& message, const UserId& author);
  Snapshot checkout(const StateId& id, const UserId& viewer) const;
  /// Transitive closure over parents, including the state itself.
  std::set<StateId> ancestry(const StateId& id) const;
  CommentId add_log_comment(const BranchId& branch, const std::string& text, const UserId& author);
  void mark_for_report(const StateId& id, bool flag, const UserId& author);
  void annotate_state(const StateId& id, const std::string& note, const UserId& author);
  void add_collaborator(const UserId& user) { collaborators_.insert(user); }

  // -- visibility and credibility ------------------------------------------
  VisibleGraph resolve_view(const StateId& id, const UserId& viewer) const;
  /// State whose commit first contained the element.
  std::optional<StateId> introduced_in(const ObjectId& id) const;
  std::optional<StateId> introduced_in(const RelationshipId& id) const;
  Credibility current_level(const ObjectId& id) const;
  /// Latest committed record of an object with its current level applied.
  EntityObject current_object(const ObjectId& id) const;
  KnowledgeEvent promote_credibility(const ObjectId& id, const UserId& author);
  KnowledgeEvent demote_credibility(const ObjectId& id, const UserId& author);
  std::vector<KnowledgeEvent> pending_events(const BranchId& branch) const;
  std::vector<KnowledgeEvent> pending_events_for(const UserId& user) const;
  void dismiss_event(const UserId& user, const EventId& event);
  const KnowledgeEvent& event(const EventId& id) const;

  // -- evidence updates ------------------------------------------------------
  /// Flags every loaded state whose payload references a touched id.
  std::set<StateId> mark_stale(const std::set<ObjectId>& objects, const std::set<RelationshipId>& relationships,
                               const UpdateId& update);
  void acknowledge_update(const StateId& id, const UpdateId& update, const UserId& author);

 private:
  friend class DocumentStore;

  struct DagNode {
    std::vector<StateId> parents;
    BranchId branch;
    Timestamp timestamp;
  };

  Document() = default;

  Timestamp next_timestamp();
  Branch& mutable_branch(const BranchId& id);
  void require_owner(const Branch& branch, const UserId& user) const;
  void insert_state(std::shared_ptr<const AnalysisState> state);
  void index_state(const AnalysisState& state);
  KnowledgeEvent change_level(const ObjectId& id, Credibility from, Credibility to, const UserId& author);

  Meta meta_;
  Clock clock_;
  std::uint64_t seq_ = 0;
  StateId root_;
  std::shared_ptr<IdSource> ids_ = std::make_shared<IdSource>();
  std::map<StateId, DagNode> dag_;
  std::map<StateId, std::shared_ptr<const AnalysisState>> states_;
  std::set<StateId> lost_;
  std::map<StateId, StateAnnotations> annotations_;
  std::map<BranchId, Branch> branches_;
  std::map<CommentId, LogComment> comments_;
  std::vector<KnowledgeEvent> events_;
  std::map<UserId, std::set<EventId>> dismissed_;
  std::set<UserId> collaborators_;
  std::map<ObjectId, StateId> object_introduced_;
  std::map<RelationshipId, StateId> relationship_introduced_;
  std::map<ObjectId, EntityObject> records_;
  std::map<ObjectId, Credibility> levels_;
};

}  // namespace casegraph
