#include "casegraph/document.hpp"

#include <algorithm>
#include <chrono>
#include <deque>

#include "casegraph/codec.hpp"
#include "casegraph/error.hpp"

namespace casegraph {

StateId compute_state_id(const DocumentId& document, const std::string& payload_hash,
                         const std::vector<StateId>& parents, const BranchId& branch, const UserId& author,
                         const Timestamp& timestamp, const std::string& message) {
  json parent_ids = json::array();
  for (const auto& p : parents) parent_ids.push_back(p.str());
  const json meta = {{"document", document.str()}, {"parents", parent_ids}, {"branch", branch.str()},
                     {"author", author.str()},     {"timestamp", to_json(timestamp)}, {"message", message}};
  const json identity = {{"payloadHash", payload_hash}, {"metaHash", sha256_hex(canonical_dump(meta))}};
  return StateId(sha256_hex(canonical_dump(identity)));
}

Document::Clock Document::system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

Timestamp Document::next_timestamp() { return Timestamp{++seq_, clock_ ? clock_() : 0}; }

Document Document::create(Meta meta, Payload root_payload, Clock clock) {
  validate_payload(root_payload);
  Document doc;
  doc.clock_ = std::move(clock);
  doc.meta_ = std::move(meta);
  doc.meta_.created_at = doc.next_timestamp();
  doc.collaborators_.insert(doc.meta_.created_by);

  const BranchId main_id("b" + std::to_string(doc.seq_));
  auto root = std::make_shared<AnalysisState>();
  root->document = doc.meta_.id;
  root->branch = main_id;
  root->author = doc.meta_.created_by;
  root->timestamp = doc.meta_.created_at;
  root->message = "initial dataset";
  root->payload_hash = payload_hash(root_payload);
  root->payload = std::move(root_payload);
  root->id = compute_state_id(root->document, root->payload_hash, root->parents, root->branch, root->author,
                              root->timestamp, root->message);
  doc.root_ = root->id;

  Branch main;
  main.id = main_id;
  main.name = "main";
  main.hypothesis = "";
  main.created_from = root->id;
  main.owner = doc.meta_.created_by;
  doc.branches_.emplace(main_id, std::move(main));
  doc.insert_state(std::move(root));
  return doc;
}

void Document::insert_state(std::shared_ptr<const AnalysisState> state) {
  dag_[state->id] = DagNode{state->parents, state->branch, state->timestamp};
  annotations_.try_emplace(state->id);
  index_state(*state);
  states_[state->id] = std::move(state);
}

void Document::index_state(const AnalysisState& state) {
  for (const auto& [id, object] : state.payload.objects) {
    object_introduced_.try_emplace(id, state.id);
    records_[id] = object;
    levels_.try_emplace(id, object.credibility);
  }
  for (const auto& [id, _] : state.payload.relationships) relationship_introduced_.try_emplace(id, state.id);
}

// ---------------------------------------------------------------------------
// inspection
// ---------------------------------------------------------------------------

const AnalysisState& Document::state(const StateId& id) const { return *state_ptr(id); }

std::shared_ptr<const AnalysisState> Document::state_ptr(const StateId& id) const {
  auto it = states_.find(id);
  if (it != states_.end()) return it->second;
  if (lost_.contains(id)) fail(ErrorCode::CorruptStore, "state " + id.str() + " could not be recovered from disk");
  fail(ErrorCode::UnknownState, "state " + id.str() + " not in document " + meta_.id.str());
}

const std::vector<StateId>& Document::parents(const StateId& id) const {
  auto it = dag_.find(id);
  if (it == dag_.end()) fail(ErrorCode::UnknownState, "state " + id.str() + " not in document " + meta_.id.str());
  return it->second.parents;
}

std::vector<StateId> Document::state_ids() const {
  std::vector<std::pair<std::uint64_t, StateId>> ordered;
  ordered.reserve(dag_.size());
  for (const auto& [id, node] : dag_) ordered.emplace_back(node.timestamp.seq, id);
  std::sort(ordered.begin(), ordered.end());
  std::vector<StateId> out;
  out.reserve(ordered.size());
  for (auto& [_, id] : ordered) out.push_back(std::move(id));
  return out;
}

const Branch& Document::branch(const BranchId& id) const {
  auto it = branches_.find(id);
  if (it == branches_.end()) fail(ErrorCode::UnknownBranch, "branch " + id.str() + " not in document " + meta_.id.str());
  return it->second;
}

Branch& Document::mutable_branch(const BranchId& id) {
  auto it = branches_.find(id);
  if (it == branches_.end()) fail(ErrorCode::UnknownBranch, "branch " + id.str() + " not in document " + meta_.id.str());
  return it->second;
}

std::optional<BranchId> Document::find_branch(const std::string& name) const {
  for (const auto& [id, b] : branches_) {
    if (b.name == name) return id;
  }
  return std::nullopt;
}

StateId Document::tip(const BranchId& id) const {
  const Branch& b = branch(id);
  for (auto it = b.entries.rbegin(); it != b.entries.rend(); ++it) {
    if (it->kind == BranchEntry::Kind::State) return StateId(it->id);
  }
  return b.created_from;
}

const StateAnnotations& Document::annotations(const StateId& id) const {
  auto it = annotations_.find(id);
  if (it == annotations_.end()) fail(ErrorCode::UnknownState, "state " + id.str() + " not in document " + meta_.id.str());
  return it->second;
}

std::vector<StateId> Document::report_candidates() const {
  std::vector<StateId> out;
  for (const auto& id : state_ids()) {
    if (annotations_.at(id).report_flag) out.push_back(id);
  }
  return out;
}

void Document::require_owner(const Branch& b, const UserId& user) const {
  if (b.owner != user) {
    fail(ErrorCode::NotBranchOwner, user.str() + " does not own branch '" + b.name + "' (owner " + b.owner.str() + ")");
  }
}

// ---------------------------------------------------------------------------
// provenance operations
// ---------------------------------------------------------------------------

BranchId Document::create_branch(const std::string& name, const std::string& hypothesis, const StateId& from,
                                 const UserId& owner) {
  if (!dag_.contains(from)) fail(ErrorCode::UnknownState, "cannot branch from unknown state " + from.str());
  if (find_branch(name)) fail(ErrorCode::DuplicateBranchName, "branch '" + name + "' already exists");
  const Timestamp ts = next_timestamp();
  Branch b;
  b.id = BranchId("b" + std::to_string(ts.seq));
  b.name = name;
  b.hypothesis = hypothesis;
  b.created_from = from;
  b.owner = owner;
  collaborators_.insert(owner);
  const BranchId id = b.id;
  branches_.emplace(id, std::move(b));
  return id;
}

StateDraft Document::open_draft(const BranchId& branch_id, const UserId& author) const {
  const Branch& b = branch(branch_id);
  require_owner(b, author);
  const StateId base = tip(branch_id);
  return StateDraft(meta_.id, branch_id, base, author, state(base).payload, ids_, meta_.layout);
}

StateId Document::commit_state(const BranchId& branch_id, StateDraft& draft, const std::string& message,
                               const UserId& author) {
  Branch& b = mutable_branch(branch_id);
  require_owner(b, author);
  if (draft.closed()) fail(ErrorCode::DraftClosed, "draft was already committed");
  if (draft.document() != meta_.id || draft.branch() != branch_id) {
    fail(ErrorCode::StaleDraft, "draft was opened on a different branch or document");
  }
  const StateId parent = tip(branch_id);
  if (draft.base() != parent) {
    fail(ErrorCode::StaleDraft, "branch tip moved from " + draft.base().str() + " to " + parent.str());
  }

  draft.settle_layout();
  Payload payload = draft.payload_for_commit();
  // Demotions take effect in every state committed after the event.
  for (auto& [id, object] : payload.objects) {
    auto level = levels_.find(id);
    if (level != levels_.end() && level->second == Credibility::Assumption &&
        object.credibility == Credibility::Knowledge) {
      object.credibility = Credibility::Assumption;
    }
  }
  validate_payload(payload);

  auto s = std::make_shared<AnalysisState>();
  s->document = meta_.id;
  s->parents = {parent};
  s->branch = branch_id;
  s->author = author;
  s->timestamp = next_timestamp();
  s->message = message;
  s->payload_hash = payload_hash(payload);
  s->payload = std::move(payload);
  s->id = compute_state_id(s->document, s->payload_hash, s->parents, s->branch, s->author, s->timestamp, s->message);
  if (dag_.contains(s->id)) fail(ErrorCode::InvariantViolation, "state id collision " + s->id.str());

  b.entries.push_back(BranchEntry{BranchEntry::Kind::State, s->id.str(), s->timestamp});
  b.handled_events.insert(draft.incorporated_events().begin(), draft.incorporated_events().end());
  const StateId id = s->id;
  insert_state(std::move(s));
  draft.close();
  return id;
}

StateId Document::commit_merge(const BranchId& target, const StateId& a, const StateId& b, Payload payload,
                               const std::string& message, const UserId& author) {
  Branch& br = mutable_branch(target);
  require_owner(br, author);
  state(a);
  state(b);
  validate_payload(payload);

  auto s = std::make_shared<AnalysisState>();
  s->document = meta_.id;
  s->parents = {a, b};
  s->branch = target;
  s->author = author;
  s->timestamp = next_timestamp();
  s->message = message;
  s->payload_hash = payload_hash(payload);
  s->payload = std::move(payload);
  s->id = compute_state_id(s->document, s->payload_hash, s->parents, s->branch, s->author, s->timestamp, s->message);
  // Both parents already exist and the new node has no children, so the
  // graph stays acyclic; a colliding id would be the only way to close a loop.
  if (dag_.contains(s->id)) fail(ErrorCode::InvariantViolation, "state id collision " + s->id.str());

  br.entries.push_back(BranchEntry{BranchEntry::Kind::State, s->id.str(), s->timestamp});
  const StateId id = s->id;
  insert_state(std::move(s));
  return id;
}

Snapshot Document::checkout(const StateId& id, const UserId& viewer) const {
  Snapshot snap;
  snap.state = state_ptr(id);
  snap.graph = resolve_view(id, viewer);
  snap.annotations = annotations(id);
  snap.editable = snap.state->author == viewer;
  return snap;
}

std::set<StateId> Document::ancestry(const StateId& id) const {
  if (!dag_.contains(id)) fail(ErrorCode::UnknownState, "state " + id.str() + " not in document " + meta_.id.str());
  std::set<StateId> seen{id};
  std::deque<StateId> queue{id};
  while (!queue.empty()) {
    const StateId current = queue.front();
    queue.pop_front();
    for (const auto& p : dag_.at(current).parents) {
      if (seen.insert(p).second) queue.push_back(p);
    }
  }
  return seen;
}

CommentId Document::add_log_comment(const BranchId& branch_id, const std::string& text, const UserId& author) {
  Branch& b = mutable_branch(branch_id);
  require_owner(b, author);
  LogComment c;
  c.timestamp = next_timestamp();
  c.id = CommentId("c" + std::to_string(c.timestamp.seq));
  c.branch = branch_id;
  c.author = author;
  c.text = text;
  b.entries.push_back(BranchEntry{BranchEntry::Kind::Comment, c.id.str(), c.timestamp});
  const CommentId id = c.id;
  comments_.emplace(id, std::move(c));
  return id;
}

void Document::mark_for_report(const StateId& id, bool flag, const UserId& author) {
  auto it = annotations_.find(id);
  if (it == annotations_.end()) fail(ErrorCode::UnknownState, "state " + id.str() + " not in document " + meta_.id.str());
  collaborators_.insert(author);
  it->second.report_flag = flag;
}

void Document::annotate_state(const StateId& id, const std::string& note, const UserId& author) {
  const AnalysisState& s = state(id);
  if (s.author != author) fail(ErrorCode::NotAuthor, "only " + s.author.str() + " may annotate state " + id.str());
  annotations_.at(id).note = note;
}

// ---------------------------------------------------------------------------
// visibility and credibility
// ---------------------------------------------------------------------------

VisibleGraph Document::resolve_view(const StateId& id, const UserId& viewer) const {
  const AnalysisState& s = state(id);
  const std::set<StateId> lineage = ancestry(id);
  LineageOracle oracle{
      [&](const ObjectId& oid) {
        auto it = object_introduced_.find(oid);
        return it != object_introduced_.end() && lineage.contains(it->second);
      },
      [&](const RelationshipId& rid) {
        auto it = relationship_introduced_.find(rid);
        return it != relationship_introduced_.end() && lineage.contains(it->second);
      }};
  return VisibleGraph{id, viewer, filter_visible(s.payload, viewer, oracle)};
}

std::optional<StateId> Document::introduced_in(const ObjectId& id) const {
  auto it = object_introduced_.find(id);
  return it == object_introduced_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<StateId> Document::introduced_in(const RelationshipId& id) const {
  auto it = relationship_introduced_.find(id);
  return it == relationship_introduced_.end() ? std::nullopt : std::optional(it->second);
}

Credibility Document::current_level(const ObjectId& id) const {
  auto it = levels_.find(id);
  if (it == levels_.end()) fail(ErrorCode::UnknownObject, "object " + id.str() + " was never committed");
  return it->second;
}

EntityObject Document::current_object(const ObjectId& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) fail(ErrorCode::UnknownObject, "object " + id.str() + " was never committed");
  EntityObject out = it->second;
  out.credibility = levels_.at(id);
  return out;
}

KnowledgeEvent Document::change_level(const ObjectId& id, Credibility from, Credibility to, const UserId& author) {
  const Credibility level = current_level(id);
  if (level != from) {
    fail(ErrorCode::WrongLevel, "object " + id.str() + " is " + std::string(to_string(level)) + ", expected " +
                                    std::string(to_string(from)));
  }
  const EntityObject& record = records_.at(id);
  if (record.author != author) fail(ErrorCode::NotAuthor, author.str() + " did not author object " + id.str());

  KnowledgeEvent event;
  event.timestamp = next_timestamp();
  event.id = EventId("e" + std::to_string(event.timestamp.seq));
  event.object = id;
  event.from = from;
  event.to = to;
  event.author = author;
  levels_[id] = to;
  event.object_after = current_object(id);
  events_.push_back(event);
  return event;
}

KnowledgeEvent Document::promote_credibility(const ObjectId& id, const UserId& author) {
  return change_level(id, Credibility::Assumption, Credibility::Knowledge, author);
}

KnowledgeEvent Document::demote_credibility(const ObjectId& id, const UserId& author) {
  return change_level(id, Credibility::Knowledge, Credibility::Assumption, author);
}

std::vector<KnowledgeEvent> Document::pending_events(const BranchId& branch_id) const {
  const Branch& b = branch(branch_id);
  std::vector<KnowledgeEvent> out;
  for (const auto& e : events_) {
    if (!b.handled_events.contains(e.id)) out.push_back(e);
  }
  return out;
}

std::vector<KnowledgeEvent> Document::pending_events_for(const UserId& user) const {
  std::vector<KnowledgeEvent> out;
  auto dismissed = dismissed_.find(user);
  for (const auto& e : events_) {
    if (e.author == user) continue;
    if (dismissed != dismissed_.end() && dismissed->second.contains(e.id)) continue;
    out.push_back(e);
  }
  return out;
}

const KnowledgeEvent& Document::event(const EventId& id) const {
  for (const auto& e : events_) {
    if (e.id == id) return e;
  }
  fail(ErrorCode::UnknownEvent, "event " + id.str() + " not in document " + meta_.id.str());
}

void Document::dismiss_event(const UserId& user, const EventId& id) {
  event(id);
  dismissed_[user].insert(id);
}

// ---------------------------------------------------------------------------
// evidence updates
// ---------------------------------------------------------------------------

std::set<StateId> Document::mark_stale(const std::set<ObjectId>& objects,
                                       const std::set<RelationshipId>& relationships, const UpdateId& update) {
  std::set<StateId> affected;
  for (const auto& [id, s] : states_) {
    bool hit = false;
    for (const auto& o : objects) {
      if (s->payload.objects.contains(o)) {
        hit = true;
        break;
      }
    }
    if (!hit) {
      for (const auto& r : relationships) {
        if (s->payload.relationships.contains(r)) {
          hit = true;
          break;
        }
      }
    }
    if (!hit) continue;
    auto& reasons = annotations_.at(id).stale_reasons;
    if (std::find(reasons.begin(), reasons.end(), update) == reasons.end()) reasons.push_back(update);
    affected.insert(id);
  }
  return affected;
}

void Document::acknowledge_update(const StateId& id, const UpdateId& update, const UserId& author) {
  const AnalysisState& s = state(id);
  if (s.author != author) fail(ErrorCode::NotAuthor, "only " + s.author.str() + " may acknowledge updates on " + id.str());
  auto& reasons = annotations_.at(id).stale_reasons;
  auto it = std::find(reasons.begin(), reasons.end(), update);
  if (it == reasons.end()) fail(ErrorCode::NotStale, "state " + id.str() + " is not stale for update " + update.str());
  reasons.erase(it);
}

}  // namespace casegraph
