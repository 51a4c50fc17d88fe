#include "casegraph/persistence.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>


#include "casegraph/error.hpp"

namespace fs = std::filesystem;

namespace casegraph {

namespace {

json ids_to_json(const std::vector<StateId>& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

std::vector<StateId> state_ids_from_json(const json& j, const std::string& path) {
  require_array(j, path);
  std::vector<StateId> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, path + ": expected string ids");
    out.emplace_back(v.get<std::string>());
  }
  return out;
}

template <class IdT>
json id_set_to_json(const std::set<IdT>& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

template <class IdT>
std::set<IdT> id_set_from_json(const json& j, const std::string& path) {
  require_array(j, path);
  std::set<IdT> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, path + ": expected string ids");
    out.emplace(v.get<std::string>());
  }
  return out;
}

json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, path + ": " + e.what());
  }
}

}  // namespace

json to_json(const AnalysisState& s) {
  return {{"id", s.id.str()},
          {"document", s.document.str()},
          {"parents", ids_to_json(s.parents)},
          {"branchId", s.branch.str()},
          {"author", s.author.str()},
          {"timestamp", to_json(s.timestamp)},
          {"message", s.message},
          {"payloadHash", s.payload_hash},
          {"payload", to_json(s.payload)}};
}

AnalysisState state_from_json(const json& j, const std::string& path) {
  AnalysisState s;
  s.id = StateId(require_string(j, "id", path));
  s.document = DocumentId(require_string(j, "document", path));
  s.parents = state_ids_from_json(require(j, "parents", path), path + ".parents");
  if (s.parents.size() > 2) fail(ErrorCode::SchemaViolation, path + ".parents: more than two parents");
  s.branch = BranchId(require_string(j, "branchId", path));
  s.author = UserId(require_string(j, "author", path));
  s.timestamp = timestamp_from_json(require(j, "timestamp", path), path + ".timestamp");
  s.message = require_string(j, "message", path);
  s.payload_hash = require_string(j, "payloadHash", path);
  s.payload = payload_from_json(require(j, "payload", path), path + ".payload");
  if (payload_hash(s.payload) != s.payload_hash) fail(ErrorCode::CorruptStore, path + ": payload hash mismatch");
  const StateId expected =
      compute_state_id(s.document, s.payload_hash, s.parents, s.branch, s.author, s.timestamp, s.message);
  if (expected != s.id) fail(ErrorCode::CorruptStore, path + ": state id does not match content");
  validate_payload(s.payload);
  return s;
}

json to_json(const KnowledgeEvent& e) {
  return {{"id", e.id.str()},
          {"object", e.object.str()},
          {"from", level_number(e.from)},
          {"to", level_number(e.to)},
          {"author", e.author.str()},
          {"timestamp", to_json(e.timestamp)},
          {"objectAfter", to_json(e.object_after)}};
}

KnowledgeEvent event_from_json(const json& j, const std::string& path) {
  KnowledgeEvent e;
  e.id = EventId(require_string(j, "id", path));
  e.object = ObjectId(require_string(j, "object", path));
  auto level = [&](const char* key) {
    const json& v = require(j, key, path);
    if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 3) {
      fail(ErrorCode::SchemaViolation, path + "." + key + ": expected level 1..3");
    }
    return static_cast<Credibility>(v.get<int>());
  };
  e.from = level("from");
  e.to = level("to");
  e.author = UserId(require_string(j, "author", path));
  e.timestamp = timestamp_from_json(require(j, "timestamp", path), path + ".timestamp");
  e.object_after = object_from_json(e.object, require(j, "objectAfter", path), path + ".objectAfter");
  return e;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// DocumentStore
// ---------------------------------------------------------------------------

void DocumentStore::adopt(const Document& doc) {
  for (const auto& [id, _] : doc.states_) written_.insert(id);
}

void DocumentStore::save(const Document& doc) {
  const fs::path states_dir = dir_ / "states";
  for (const auto& [id, s] : doc.states_) {
    if (written_.contains(id)) continue;
    const fs::path file = states_dir / (id.str() + ".json");
    if (!fs::exists(file)) write_file_atomic(file, canonical_dump(to_json(*s)));
    written_.insert(id);
  }

  json branches = json::array();
  for (const auto& [id, b] : doc.branches_) {
    json entries = json::array();
    for (const auto& e : b.entries) {
      json entry = {{"id", e.id}, {"timestamp", to_json(e.timestamp)}};
      if (e.kind == BranchEntry::Kind::State) {
        entry["type"] = "state";
        entry["parents"] = ids_to_json(doc.dag_.at(StateId(e.id)).parents);
      } else {
        const LogComment& c = doc.comments_.at(CommentId(e.id));
        entry["type"] = "comment";
        entry["author"] = c.author.str();
        entry["text"] = c.text;
      }
      entries.push_back(std::move(entry));
    }
    branches.push_back({{"id", id.str()},
                        {"name", b.name},
                        {"hypothesis", b.hypothesis},
                        {"createdFrom", b.created_from.str()},
                        {"owner", b.owner.str()},
                        {"active", b.active},
                        {"handledEvents", id_set_to_json(b.handled_events)},
                        {"entries", std::move(entries)}});
  }

  json events = json::array();
  for (const auto& e : doc.events_) events.push_back(to_json(e));
  json dismissed = json::object();
  for (const auto& [user, ids] : doc.dismissed_) dismissed[user.str()] = id_set_to_json(ids);

  json annotations = json::object();
  for (const auto& [id, a] : doc.annotations_) {
    json reasons = json::array();
    for (const auto& r : a.stale_reasons) reasons.push_back(r.str());
    annotations[id.str()] = {{"reportFlag", a.report_flag}, {"staleReasons", reasons}, {"note", a.note}};
  }

  json datasets = json::array();
  for (const auto& d : doc.meta_.initial_datasets) datasets.push_back(d.str());
  const auto& root_node = doc.dag_.at(doc.root_);
  const json meta = {{"id", doc.meta_.id.str()},
                     {"name", doc.meta_.name},
                     {"caseId", doc.meta_.case_id.str()},
                     {"initialDatasetIds", datasets},
                     {"createdBy", doc.meta_.created_by.str()},
                     {"createdAt", to_json(doc.meta_.created_at)},
                     {"layout", to_json(doc.meta_.layout)},
                     {"rootStateId", doc.root_.str()},
                     {"rootBranchId", root_node.branch.str()},
                     {"rootTimestamp", to_json(root_node.timestamp)},
                     {"seq", doc.seq_},
                     {"nextId", doc.ids_->peek()},
                     {"collaborators", id_set_to_json(doc.collaborators_)}};

  write_file_atomic(dir_ / "branches.json", canonical_dump({{"branches", branches}}));
  write_file_atomic(dir_ / "events.json", canonical_dump({{"events", events}, {"dismissed", dismissed}}));
  write_file_atomic(dir_ / "annotations.json", canonical_dump(annotations));
  write_file_atomic(dir_ / "document.json", canonical_dump(meta));
}

Document DocumentStore::load(const fs::path& dir, std::vector<LoadWarning>& warnings, Document::Clock clock) {
  auto read_index = [&](const char* name) {
    const fs::path file = dir / name;
    try {
      return parse_json(read_file(file), file.string());
    } catch (const Error& e) {
      fail(ErrorCode::CorruptStore, file.string() + ": " + e.detail());
    }
  };

  Document doc;
  doc.clock_ = std::move(clock);
  const json meta = read_index("document.json");
  const json branches = read_index("branches.json");
  const json events = read_index("events.json");
  const json annotations = read_index("annotations.json");

  std::vector<std::tuple<std::uint64_t, StateId, fs::path>> referenced;
  try {
    const std::string mp = "document.json";
    doc.meta_.id = DocumentId(require_string(meta, "id", mp));
    doc.meta_.name = require_string(meta, "name", mp);
    doc.meta_.case_id = CaseId(require_string(meta, "caseId", mp));
    for (const auto& d : require(meta, "initialDatasetIds", mp)) doc.meta_.initial_datasets.emplace_back(d.get<std::string>());
    doc.meta_.created_by = UserId(require_string(meta, "createdBy", mp));
    doc.meta_.created_at = timestamp_from_json(require(meta, "createdAt", mp), mp + ".createdAt");
    doc.meta_.layout = layout_params_from_json(require(meta, "layout", mp), mp + ".layout");
    doc.root_ = StateId(require_string(meta, "rootStateId", mp));
    doc.seq_ = require(meta, "seq", mp).get<std::uint64_t>();
    doc.ids_ = std::make_shared<IdSource>(require(meta, "nextId", mp).get<std::uint64_t>());
    doc.collaborators_ = id_set_from_json<UserId>(require(meta, "collaborators", mp), mp + ".collaborators");
    const Timestamp root_ts = timestamp_from_json(require(meta, "rootTimestamp", mp), mp + ".rootTimestamp");
    doc.dag_[doc.root_] = Document::DagNode{{}, BranchId(require_string(meta, "rootBranchId", mp)), root_ts};
    referenced.emplace_back(root_ts.seq, doc.root_, dir / "states" / (doc.root_.str() + ".json"));

    const std::string bp = "branches.json";
    for (const auto& bj : require(branches, "branches", bp)) {
      Branch b;
      b.id = BranchId(require_string(bj, "id", bp));
      b.name = require_string(bj, "name", bp);
      b.hypothesis = require_string(bj, "hypothesis", bp);
      b.created_from = StateId(require_string(bj, "createdFrom", bp));
      b.owner = UserId(require_string(bj, "owner", bp));
      b.active = optional_bool(bj, "active", bp, true);
      b.handled_events = id_set_from_json<EventId>(require(bj, "handledEvents", bp), bp + ".handledEvents");
      for (const auto& ej : require(bj, "entries", bp)) {
        BranchEntry e;
        e.id = require_string(ej, "id", bp);
        e.timestamp = timestamp_from_json(require(ej, "timestamp", bp), bp + ".timestamp");
        const std::string type = require_string(ej, "type", bp);
        if (type == "state") {
          e.kind = BranchEntry::Kind::State;
          const StateId sid(e.id);
          doc.dag_[sid] = Document::DagNode{state_ids_from_json(require(ej, "parents", bp), bp), b.id, e.timestamp};
          referenced.emplace_back(e.timestamp.seq, sid, dir / "states" / (e.id + ".json"));
        } else if (type == "comment") {
          e.kind = BranchEntry::Kind::Comment;
          LogComment c{CommentId(e.id), b.id, UserId(require_string(ej, "author", bp)), e.timestamp,
                       require_string(ej, "text", bp)};
          doc.comments_.emplace(c.id, std::move(c));
        } else {
          fail(ErrorCode::SchemaViolation, bp + ": unknown entry type '" + type + "'");
        }
        b.entries.push_back(std::move(e));
      }
      doc.branches_.emplace(b.id, std::move(b));
    }

    const std::string ep = "events.json";
    for (const auto& ej : require(events, "events", ep)) doc.events_.push_back(event_from_json(ej, ep));
    for (const auto& [user, ids] : require(events, "dismissed", ep).items()) {
      doc.dismissed_[UserId(user)] = id_set_from_json<EventId>(ids, ep + ".dismissed");
    }

    for (const auto& [sid, aj] : annotations.items()) {
      StateAnnotations a;
      a.report_flag = optional_bool(aj, "reportFlag", "annotations.json", false);
      a.note = optional_string(aj, "note", "annotations.json");
      for (const auto& r : require(aj, "staleReasons", "annotations.json")) a.stale_reasons.emplace_back(r.get<std::string>());
      doc.annotations_[StateId(sid)] = std::move(a);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptStore) throw;
    fail(ErrorCode::CorruptStore, dir.string() + ": " + e.detail());
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptStore, dir.string() + ": " + e.what());
  }

  // States, then events, replayed in commit order so that derived indices
  // (introducing state, current credibility) match the original history.
  std::sort(referenced.begin(), referenced.end());
  std::set<fs::path> referenced_files;
  std::map<std::uint64_t, std::shared_ptr<const AnalysisState>> loaded;
  for (const auto& [seq, sid, file] : referenced) {
    referenced_files.insert(file);
    doc.annotations_.try_emplace(sid);
    try {
      auto s = std::make_shared<AnalysisState>(state_from_json(parse_json(read_file(file), file.string()), file.string()));
      if (s->id != sid || s->parents != doc.dag_.at(sid).parents) {
        fail(ErrorCode::CorruptStore, file.string() + ": content disagrees with branch index");
      }
      loaded.emplace(seq, std::move(s));
    } catch (const Error& e) {
      warnings.push_back({file.string(), "CorruptStore: " + e.detail()});
      doc.lost_.insert(sid);
    }
  }
  std::map<std::uint64_t, const KnowledgeEvent*> replay_events;
  for (const auto& e : doc.events_) replay_events.emplace(e.timestamp.seq, &e);
  auto next_event = replay_events.begin();
  for (auto& [seq, s] : loaded) {
    for (; next_event != replay_events.end() && next_event->first < seq; ++next_event) {
      doc.levels_[next_event->second->object] = next_event->second->to;
    }
    doc.index_state(*s);
    doc.states_.emplace(s->id, std::move(s));
  }
  for (; next_event != replay_events.end(); ++next_event) {
    doc.levels_[next_event->second->object] = next_event->second->to;
  }

  std::error_code ec;
  if (fs::is_directory(dir / "states", ec)) {
    for (const auto& entry : fs::directory_iterator(dir / "states")) {
      if (!referenced_files.contains(entry.path())) {
        warnings.push_back({entry.path().string(), "unreferenced state file ignored"});
      }
    }
  }
  return doc;
}

}  // namespace casegraph
