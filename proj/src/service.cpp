#include "casegraph/service.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include <httplib.h>

#include "casegraph/diff.hpp"
#include "casegraph/persistence.hpp"

namespace casegraph {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

std::string ServiceConfig::host() const {
  const auto colon = listen_address.rfind(':');
  return colon == std::string::npos ? listen_address : listen_address.substr(0, colon);
}

int ServiceConfig::port() const {
  const auto colon = listen_address.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::ConfigError, "listenAddress '" + listen_address + "' has no port");
  const std::string digits = listen_address.substr(colon + 1);
  if (digits.empty() || digits.size() > 5 || !std::all_of(digits.begin(), digits.end(), ::isdigit)) {
    fail(ErrorCode::ConfigError, "listenAddress '" + listen_address + "' has an invalid port");
  }
  const int port = std::stoi(digits);
  if (port > 65535) fail(ErrorCode::ConfigError, "port " + digits + " out of range");
  return port;
}

ServiceConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  ServiceConfig c;
  try {
    c.listen_address = optional_string(j, "listenAddress", "config", c.listen_address);
    c.data_root = optional_string(j, "dataRootPath", "config");
    c.case_id = CaseId(optional_string(j, "caseId", "config", c.case_id.str()));
    c.auth_mode = optional_string(j, "authMode", "config", c.auth_mode);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.detail());
  }
  if (c.auth_mode != "header-identity") fail(ErrorCode::ConfigError, "authMode '" + c.auth_mode + "' is not supported");
  if (c.case_id.empty()) fail(ErrorCode::ConfigError, "caseId must not be empty");
  return c;
}

void apply_environment(ServiceConfig& config) {
  if (const char* root = std::getenv("CASEGRAPH_DATA_ROOT"); root && *root) config.data_root = root;
}

ServiceConfig load_config(const fs::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.detail());
  }
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, file.string() + ": not valid JSON");
  ServiceConfig c = config_from_json(j);
  apply_environment(c);
  if (c.data_root.empty()) fail(ErrorCode::ConfigError, "dataRootPath missing and CASEGRAPH_DATA_ROOT unset");
  if (c.data_root.is_relative()) c.data_root = fs::absolute(file).parent_path() / c.data_root;
  return c;
}

// ---------------------------------------------------------------------------
// error mapping
// ---------------------------------------------------------------------------

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CredibilityViolation:
    case ErrorCode::ConflictingFlags:
    case ErrorCode::EmptySelection:
    case ErrorCode::InvariantViolation:
    case ErrorCode::EmptyGraph:
    case ErrorCode::RelayoutNotRequested:
    case ErrorCode::CrossDocumentDiff:
    case ErrorCode::InvalidSelection:
    case ErrorCode::SchemaViolation:
    case ErrorCode::InvalidEvaluationCode:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::MissingIdentity:
    case ErrorCode::ConfigError:
      return 400;
    case ErrorCode::NotBranchOwner:
    case ErrorCode::NotAuthor:
    case ErrorCode::AttributeLocked:
      return 403;
    case ErrorCode::UnknownObject:
    case ErrorCode::UnknownGroup:
    case ErrorCode::UnknownState:
    case ErrorCode::UnknownDocument:
    case ErrorCode::UnknownBranch:
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownUpdate:
    case ErrorCode::UnknownEvent:
    case ErrorCode::UnknownReport:
    case ErrorCode::UnknownDraft:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::DraftClosed:
    case ErrorCode::WrongLevel:
    case ErrorCode::AlreadyGrouped:
    case ErrorCode::AlreadyPlaced:
    case ErrorCode::DuplicateBranchName:
    case ErrorCode::StaleDraft:
    case ErrorCode::UnresolvedConflict:
    case ErrorCode::DuplicateId:
    case ErrorCode::VersionMismatch:
    case ErrorCode::NotStale:
    case ErrorCode::UnflaggedState:
      return 409;
    case ErrorCode::CorruptStore:
    case ErrorCode::BindFailure:
    case ErrorCode::IoError:
      return 500;
  }
  return 500;
}

json error_body(const Error& error) {
  return {{"code", std::string(to_string(error.code()))}, {"message", error.detail()}};
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

namespace {

using Segments = std::vector<std::string>;

Segments split_path(const std::string& path) {
  Segments out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string url_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else if (s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

json ids_json(const auto& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

json branch_json(const Document& doc, const Branch& b) {
  json entries = json::array();
  for (const auto& e : b.entries) {
    json entry = {{"type", e.kind == BranchEntry::Kind::State ? "state" : "comment"}, {"id", e.id},
                  {"timestamp", to_json(e.timestamp)}};
    if (e.kind == BranchEntry::Kind::Comment) {
      const LogComment& c = doc.comments().at(CommentId(e.id));
      entry["author"] = c.author.str();
      entry["text"] = c.text;
    }
    entries.push_back(std::move(entry));
  }
  return {{"id", b.id.str()},
          {"name", b.name},
          {"hypothesis", b.hypothesis},
          {"createdFrom", b.created_from.str()},
          {"owner", b.owner.str()},
          {"active", b.active},
          {"tip", doc.tip(b.id).str()},
          {"handledEvents", ids_json(b.handled_events)},
          {"entries", entries}};
}

json state_meta(const Document& doc, const StateId& id) {
  if (doc.lost_states().contains(id)) {
    return {{"id", id.str()}, {"parents", ids_json(doc.parents(id))}, {"lost", true}};
  }
  const AnalysisState& s = doc.state(id);
  const StateAnnotations& a = doc.annotations(id);
  return {{"id", s.id.str()},
          {"parents", ids_json(s.parents)},
          {"branchId", s.branch.str()},
          {"author", s.author.str()},
          {"timestamp", to_json(s.timestamp)},
          {"message", s.message},
          {"payloadHash", s.payload_hash},
          {"isMerge", s.is_merge()},
          {"reportFlag", a.report_flag},
          {"stale", a.stale()},
          {"staleReasons", ids_json(a.stale_reasons)},
          {"note", a.note},
          {"lost", false}};
}

json document_summary(const Document& doc) {
  std::size_t stale = 0;
  for (const auto& id : doc.state_ids()) {
    if (!doc.lost_states().contains(id) && doc.annotations(id).stale()) ++stale;
  }
  const auto& m = doc.meta();
  return {{"id", m.id.str()},
          {"name", m.name},
          {"caseId", m.case_id.str()},
          {"initialDatasetIds", ids_json(m.initial_datasets)},
          {"createdBy", m.created_by.str()},
          {"createdAt", to_json(m.created_at)},
          {"layout", to_json(m.layout)},
          {"rootStateId", doc.root().str()},
          {"stateCount", doc.state_ids().size()},
          {"branchCount", doc.branches().size()},
          {"staleStateCount", stale},
          {"lostStates", ids_json(doc.lost_states())}};
}

json document_detail(const Document& doc) {
  json out = document_summary(doc);
  json branches = json::array(), states = json::array();
  for (const auto& [_, b] : doc.branches()) branches.push_back(branch_json(doc, b));
  for (const auto& id : doc.state_ids()) states.push_back(state_meta(doc, id));
  out["branches"] = branches;
  out["states"] = states;
  out["collaborators"] = ids_json(doc.collaborators());
  out["reportCandidates"] = ids_json(doc.report_candidates());
  return out;
}

json draft_json(const DraftInfo& info, const StateDraft& draft) {
  std::vector<ObjectId> pending(draft.pending_placement().begin(), draft.pending_placement().end());
  return {{"draftId", info.id.str()},
          {"documentId", info.document.str()},
          {"branchId", info.branch.str()},
          {"baseStateId", info.base.str()},
          {"owner", info.owner.str()},
          {"payload", to_json(filter_visible(draft.payload(), info.owner, LineageOracle::always()))},
          {"pendingPlacement", ids_json(pending)},
          {"incorporatedEvents", ids_json(draft.incorporated_events())}};
}

json dataset_summary(const Dataset& d) {
  return {{"id", d.id.str()},
          {"name", d.name},
          {"version", d.version},
          {"loadedAt", d.loaded_at},
          {"objectCount", d.objects.size()},
          {"relationshipCount", d.relationships.size()}};
}

json report_summary(const ReportDocument& r) {
  return {{"id", r.id.str()},           {"caseId", r.case_id.str()},   {"documentId", r.document.str()},
          {"title", r.title},           {"createdBy", r.created_by.str()}, {"createdAt", r.created_at},
          {"sectionCount", r.sections.size()}, {"hash", report_hash(r)}};
}

// -- request body helpers ---------------------------------------------------

const json& field(const json& body, const char* key) { return require(body, key, "body"); }
std::string text(const json& body, const char* key) { return require_string(body, key, "body"); }

Value api_value(const json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) {
    const double d = j.get<double>();
    if (!std::isfinite(d)) fail(ErrorCode::SchemaViolation, path + ": number must be finite");
    return d;
  }
  if (j.is_object() && j.contains("date") && j.size() == 1 && j["date"].is_string()) return Date{j["date"].get<std::string>()};
  if (j.is_object()) return value_from_json(j, path);
  fail(ErrorCode::SchemaViolation, path + ": expected a value");
}

std::map<std::string, Value> api_attributes(const json& body) {
  std::map<std::string, Value> out;
  auto it = body.find("attributes");
  if (it == body.end()) return out;
  require_object(*it, "body.attributes");
  for (const auto& [k, v] : it->items()) out.emplace(k, api_value(v, "body.attributes." + k));
  return out;
}

Credibility api_credibility(const json& body) {
  const json& v = field(body, "credibility");
  if (v.is_number_integer()) {
    const int level = v.get<int>();
    if (level < 1 || level > 3) fail(ErrorCode::SchemaViolation, "body.credibility: level out of range");
    return credibility_from_level(level);
  }
  if (v.is_string()) {
    for (Credibility c : kAllCredibilities) {
      if (to_string(c) == lower(v.get<std::string>())) return c;
    }
  }
  fail(ErrorCode::SchemaViolation, "body.credibility: expected 1..3 or evidence|knowledge|assumption");
}

std::vector<ObjectId> object_ids(const json& body, const char* key) {
  const json& arr = field(body, key);
  require_array(arr, std::string("body.") + key);
  std::vector<ObjectId> out;
  for (const auto& v : arr) {
    if (!v.is_string()) fail(ErrorCode::SchemaViolation, std::string("body.") + key + ": expected strings");
    out.emplace_back(v.get<std::string>());
  }
  return out;
}

struct DraftContext {
  LayoutParams layout;
  std::optional<KnowledgeEvent> event;
};

json apply_draft_op(StateDraft& draft, const json& body, const UserId& user, Case& ws, const DraftContext& ctx) {
  const std::string op = text(body, "op");
  if (op == "createObject") {
    const ObjectId id = draft.create_object(text(body, "kind"), api_attributes(body), api_credibility(body), user);
    return {{"objectId", id.str()}};
  }
  if (op == "createRelationship") {
    const RelationshipId id =
        draft.create_relationship(ObjectId(text(body, "source")), ObjectId(text(body, "target")), text(body, "kind"),
                                  optional_bool(body, "directed", "body", true), api_attributes(body),
                                  api_credibility(body), user);
    return {{"relationshipId", id.str()}};
  }
  if (op == "setAttribute") {
    draft.set_attribute(ObjectId(text(body, "objectId")), text(body, "key"), api_value(field(body, "value"), "body.value"),
                        api_credibility(body), user);
    return json::object();
  }
  if (op == "deleteObject") {
    draft.delete_object(ObjectId(text(body, "objectId")), user);
    return json::object();
  }
  if (op == "deleteRelationship") {
    draft.delete_relationship(RelationshipId(text(body, "relationshipId")), user);
    return json::object();
  }
  if (op == "excludeEvidence") {
    draft.exclude_evidence(ObjectId(text(body, "objectId")), user);
    return json::object();
  }
  if (op == "includeEvidence") {
    auto [objects, rels] = ws.evidence(object_ids(body, "objectIds"));
    draft.include_evidence(objects, rels, user);
    return json::object();
  }
  if (op == "group") {
    std::optional<std::string> tag;
    if (body.contains("tagColor")) tag = text(body, "tagColor");
    const GroupId id = draft.group_nodes(object_ids(body, "objectIds"), text(body, "name"), tag, user);
    return {{"groupId", id.str()}};
  }
  if (op == "ungroup") {
    draft.ungroup(GroupId(text(body, "groupId")), user);
    return json::object();
  }
  if (op == "collapseGroup") {
    draft.set_group_collapsed(GroupId(text(body, "groupId")), optional_bool(body, "collapsed", "body", true), user);
    return json::object();
  }
  if (op == "visual") {
    const std::string change = text(body, "change");
    VisualChange vc;
    if (change == "minimize") vc = VisualChange::minimize();
    else if (change == "restore") vc = VisualChange::restore();
    else if (change == "focus") vc = VisualChange::focus();
    else if (change == "unfocus") vc = VisualChange::unfocus();
    else if (change == "move") {
      const json& p = field(body, "position");
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        fail(ErrorCode::SchemaViolation, "body.position: expected [x, y]");
      }
      vc = VisualChange::move(Vec2{p[0].get<double>(), p[1].get<double>()});
    } else {
      fail(ErrorCode::SchemaViolation, "body.change: expected minimize|restore|focus|unfocus|move");
    }
    draft.set_node_visual(ObjectId(text(body, "objectId")), vc, user);
    return json::object();
  }
  if (op == "relayout") {
    LayoutParams params = ctx.layout;
    if (body.contains("layout")) params = layout_params_from_json(body["layout"], "body.layout");
    draft.relayout(params, RelayoutRequest{optional_bool(body, "userRequested", "body", false)}, user);
    return json::object();
  }
  if (op == "incorporateEvent") {
    draft.incorporate_event(*ctx.event, user);
    return json::object();
  }
  fail(ErrorCode::SchemaViolation, "body.op: unknown draft operation '" + op + "'");
}

HttpResponse respond(int status, const json& body) { return {status, "application/json", canonical_dump(body)}; }
HttpResponse ok(const json& body) { return respond(200, body); }
HttpResponse created(const json& body) { return respond(201, body); }

[[noreturn]] void not_found(const HttpRequest& r) { fail(ErrorCode::NotFound, "no route for " + r.method + " " + r.path); }

}  // namespace

// ---------------------------------------------------------------------------
// Api
// ---------------------------------------------------------------------------

Api::Api(ServiceConfig config, Case::Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
  if (config_.data_root.empty()) fail(ErrorCode::ConfigError, "data root not configured");
  std::error_code ec;
  fs::create_directories(config_.data_root, ec);
  if (!fs::is_directory(config_.data_root)) {
    fail(ErrorCode::ConfigError, "data root " + config_.data_root.string() + " is not a directory");
  }
  const fs::path probe = config_.data_root / ".write-probe";
  try {
    write_file_atomic(probe, "ok");
    fs::remove(probe, ec);
  } catch (const Error&) {
    fail(ErrorCode::ConfigError, "data root " + config_.data_root.string() + " is not writable");
  }
  workspace();
}

Case& Api::workspace(const std::optional<CaseId>& id) {
  const CaseId cid = id.value_or(config_.case_id);
  if (cid.empty() || cid.str().find_first_of("/\\.") != std::string::npos) {
    fail(ErrorCode::SchemaViolation, "invalid case id '" + cid.str() + "'");
  }
  std::lock_guard lock(cases_mutex_);
  auto it = cases_.find(cid);
  if (it == cases_.end()) it = cases_.emplace(cid, std::make_unique<Case>(config_.data_root, cid, clock_)).first;
  return *it->second;
}

std::vector<LoadWarning> Api::warnings() {
  std::vector<LoadWarning> out;
  std::lock_guard lock(cases_mutex_);
  for (const auto& [_, c] : cases_) {
    auto w = c->warnings();
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

HttpResponse Api::handle(const std::string& method, const std::string& target, const json& body,
                         const std::string& user, std::map<std::string, std::string> headers) {
  HttpRequest r;
  r.method = method;
  const auto q = target.find('?');
  r.path = target.substr(0, q);
  if (q != std::string::npos) {
    std::istringstream qs(target.substr(q + 1));
    std::string pair;
    while (std::getline(qs, pair, '&')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) r.query[url_decode(pair)] = "";
      else r.query[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
    }
  }
  for (auto& [k, v] : headers) r.headers[lower(k)] = v;
  if (!user.empty()) r.headers["x-user-id"] = user;
  if (!body.is_null()) r.body = body.dump();
  return handle(r);
}

HttpResponse Api::handle(const HttpRequest& request) {
  try {
    const Segments seg = split_path(request.path);
    if (seg.size() < 1 || seg[0] != "v1") not_found(request);
    if (seg.size() == 2 && seg[1] == "health" && request.method == "GET") {
      json warnings = json::array();
      for (const auto& w : this->warnings()) warnings.push_back({{"file", w.file}, {"message", w.message}});
      Case& ws = workspace();
      return ok({{"status", "ok"}, {"caseId", ws.id().str()}, {"documentCount", ws.document_ids().size()},
                 {"warnings", warnings}});
    }
    auto user_it = request.headers.find("x-user-id");
    if (user_it == request.headers.end() || user_it->second.empty()) {
      fail(ErrorCode::MissingIdentity, "X-User-Id header is required");
    }
    std::optional<CaseId> case_id;
    if (auto it = request.headers.find("x-case-id"); it != request.headers.end() && !it->second.empty()) {
      case_id = CaseId(it->second);
    }
    Case& ws = workspace(case_id);
    return route(request, UserId(user_it->second), ws);
  } catch (const Error& e) {
    return respond(http_status(e.code()), error_body(e));
  } catch (const json::exception& e) {
    return respond(400, {{"code", "SchemaViolation"}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return respond(500, {{"code", "IoError"}, {"message", e.what()}});
  }
}

HttpResponse Api::route(const HttpRequest& r, const UserId& user, Case& ws) {
  const Segments s = split_path(r.path);
  const std::string& m = r.method;
  const std::size_t n = s.size();
  json body = json::object();
  if (!r.body.empty()) {
    body = json::parse(r.body, nullptr, false);
    if (body.is_discarded()) fail(ErrorCode::SchemaViolation, "body: not valid JSON");
  }
  if ((m == "POST" || m == "PUT") && !body.is_object()) fail(ErrorCode::SchemaViolation, "body: expected object");

  auto query = [&](const char* key) {
    auto it = r.query.find(key);
    if (it == r.query.end() || it->second.empty()) fail(ErrorCode::SchemaViolation, std::string("query parameter '") + key + "' is required");
    return it->second;
  };

  // -- /v1/documents ---------------------------------------------------------
  if (n >= 2 && s[1] == "documents") {
    if (n == 2 && m == "GET") {
      json out = json::array();
      for (const auto& id : ws.document_ids()) out.push_back(ws.read(id, document_summary));
      return ok(out);
    }
    if (n == 2 && m == "POST") {
      std::vector<DatasetId> datasets;
      if (body.contains("datasetIds")) {
        require_array(body["datasetIds"], "body.datasetIds");
        for (const auto& d : body["datasetIds"]) datasets.emplace_back(d.get<std::string>());
      }
      std::optional<LayoutParams> layout;
      if (body.contains("layout")) layout = layout_params_from_json(body["layout"], "body.layout");
      const DocumentId id = ws.create_document(text(body, "name"), datasets, user, layout);
      return created(ws.read(id, document_detail));
    }
    if (n < 3) not_found(r);
    const DocumentId doc(s[2]);

    if (n == 3 && m == "GET") return ok(ws.read(doc, document_detail));

    if (n == 4 && s[3] == "branches" && m == "POST") {
      json out = ws.write(doc, [&](Document& d) {
        const BranchId id = d.create_branch(text(body, "name"), optional_string(body, "hypothesis", "body"),
                                            StateId(text(body, "fromStateId")), user);
        return branch_json(d, d.branch(id));
      });
      return created(out);
    }
    if (n == 5 && s[3] == "branches" && m == "GET") {
      return ok(ws.read(doc, [&](const Document& d) { return branch_json(d, d.branch(BranchId(s[4]))); }));
    }
    if (n == 6 && s[3] == "branches" && s[5] == "comments" && m == "POST") {
      json out = ws.write(doc, [&](Document& d) {
        return json{{"commentId", d.add_log_comment(BranchId(s[4]), text(body, "text"), user).str()}};
      });
      return created(out);
    }
    if (n == 6 && s[3] == "branches" && s[5] == "drafts" && m == "POST") {
      const DraftInfo info = ws.open_draft(doc, BranchId(s[4]), user);
      return created(ws.edit_draft(info.id, user, [&](StateDraft& d) { return draft_json(info, d); }));
    }
    if (n == 6 && s[3] == "branches" && s[5] == "events" && m == "GET") {
      return ok(ws.read(doc, [&](const Document& d) {
        json out = json::array();
        for (const auto& e : d.pending_events(BranchId(s[4]))) out.push_back(to_json(e));
        return out;
      }));
    }

    if (n >= 5 && s[3] == "states") {
      const StateId state(s[4]);
      if (n == 5 && m == "GET") {
        return ok(ws.read(doc, [&](const Document& d) {
          const Snapshot snap = d.checkout(state, user);
          return json{{"state", state_meta(d, state)},
                      {"payload", to_json(snap.graph.payload)},
                      {"editable", snap.editable}};
        }));
      }
      if (n == 6 && s[5] == "ancestry" && m == "GET") {
        return ok(ws.read(doc, [&](const Document& d) { return ids_json(d.ancestry(state)); }));
      }
      if (n == 6 && s[5] == "report-flag" && m == "POST") {
        return ok(ws.write(doc, [&](Document& d) {
          d.mark_for_report(state, optional_bool(body, "flag", "body", true), user);
          return state_meta(d, state);
        }));
      }
      if (n == 6 && s[5] == "annotation" && m == "POST") {
        return ok(ws.write(doc, [&](Document& d) {
          d.annotate_state(state, text(body, "note"), user);
          return state_meta(d, state);
        }));
      }
      if (n == 6 && s[5] == "acknowledge" && m == "POST") {
        return ok(ws.write(doc, [&](Document& d) {
          d.acknowledge_update(state, UpdateId(text(body, "updateId")), user);
          return state_meta(d, state);
        }));
      }
    }

    if (n == 4 && s[3] == "diff" && m == "GET") {
      const StateId a(query("a")), b(query("b"));
      if (auto other = r.query.find("docB"); other != r.query.end() && other->second != doc.str()) {
        fail(ErrorCode::CrossDocumentDiff, "states belong to documents " + doc.str() + " and " + other->second);
      }
      return ok(ws.read(doc, [&](const Document& d) { return to_json(diff(d, a, b, user)); }));
    }
    if (n == 4 && s[3] == "merge" && m == "POST") {
      const MergeSelection selection = merge_selection_from_json(field(body, "selection"), "body.selection");
      json out = ws.write(doc, [&](Document& d) {
        return to_json(merge(d, BranchId(text(body, "targetBranchId")), StateId(text(body, "stateA")),
                             StateId(text(body, "stateB")), selection, user,
                             optional_string(body, "message", "body", "merge")));
      });
      return created(out);
    }

    if (n == 6 && s[3] == "objects" && (s[5] == "promote" || s[5] == "demote") && m == "POST") {
      json out = ws.write(doc, [&](Document& d) {
        const ObjectId id(s[4]);
        return to_json(s[5] == "promote" ? d.promote_credibility(id, user) : d.demote_credibility(id, user));
      });
      return created(out);
    }
    if (n == 4 && s[3] == "events" && m == "GET") {
      return ok(ws.read(doc, [&](const Document& d) {
        json out = json::array();
        for (const auto& e : d.pending_events_for(user)) out.push_back(to_json(e));
        return out;
      }));
    }
    if (n == 6 && s[3] == "events" && s[5] == "dismiss" && m == "POST") {
      ws.write(doc, [&](Document& d) { d.dismiss_event(user, EventId(s[4])); });
      return ok(json::object());
    }
    not_found(r);
  }

  // -- /v1/drafts ---------------------------------------------------------------
  if (n >= 3 && s[1] == "drafts") {
    const DraftId id(s[2]);
    if (n == 3 && m == "GET") {
      const DraftInfo info = ws.draft_info(id);
      return ok(ws.edit_draft(id, user, [&](StateDraft& d) { return draft_json(info, d); }));
    }
    if (n == 3 && m == "DELETE") {
      ws.discard_draft(id, user);
      return ok(json::object());
    }
    if (n == 4 && s[3] == "ops" && m == "POST") {
      const DraftInfo info = ws.draft_info(id);
      // Document first, then the draft lock on its own: commit takes them in
      // the opposite nesting.
      const DraftContext ctx = ws.read(info.document, [&](const Document& d) {
        DraftContext c{d.meta().layout, std::nullopt};
        if (body.value("op", "") == "incorporateEvent") c.event = d.event(EventId(text(body, "eventId")));
        return c;
      });
      return ok(ws.edit_draft(id, user, [&](StateDraft& draft) {
        json out = apply_draft_op(draft, body, user, ws, ctx);
        out["draft"] = draft_json(info, draft);
        return out;
      }));
    }
    if (n == 4 && s[3] == "commit" && m == "POST") {
      std::string key;
      if (auto it = r.headers.find("idempotency-key"); it != r.headers.end() && !it->second.empty()) {
        key = user.str() + "\n" + id.str() + "\n" + it->second;
        std::lock_guard lock(idempotency_mutex_);
        if (auto cached = idempotent_commits_.find(key); cached != idempotent_commits_.end()) return created(cached->second);
      }
      const StateId state = ws.commit_draft(id, optional_string(body, "message", "body"), user);
      const json out = {{"stateId", state.str()}};
      if (!key.empty()) {
        std::lock_guard lock(idempotency_mutex_);
        idempotent_commits_.emplace(key, out);
      }
      return created(out);
    }
    not_found(r);
  }

  // -- /v1/datasets, /v1/updates, /v1/jobs ---------------------------------------
  if (n == 2 && s[1] == "datasets" && m == "GET") {
    json out = json::array();
    for (const auto& id : ws.dataset_ids()) out.push_back(dataset_summary(ws.dataset(id)));
    return ok(out);
  }
  if (n == 2 && s[1] == "datasets" && m == "POST") {
    return created(dataset_summary(ws.dataset(ws.load_dataset(body))));
  }
  if (n == 3 && s[1] == "datasets" && m == "GET") return ok(to_json(ws.dataset(DatasetId(s[2]))));
  if (n == 2 && s[1] == "updates" && m == "POST") return created(to_json(ws.apply_update(body)));
  if (n == 2 && s[1] == "updates" && m == "GET") {
    json out = json::array();
    for (const auto& u : ws.updates()) out.push_back(to_json(u));
    return ok(out);
  }
  if (n == 2 && s[1] == "jobs" && m == "GET") {
    json out = json::array();
    for (const auto& j : ws.list_jobs()) out.push_back(to_json(j));
    return ok(out);
  }

  // -- /v1/reports -------------------------------------------------------------
  if (n == 2 && s[1] == "reports" && m == "POST") {
    std::vector<std::pair<StateId, std::string>> sections;
    const json& arr = field(body, "sections");
    require_array(arr, "body.sections");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "body.sections[" + std::to_string(i) + "]";
      sections.emplace_back(StateId(require_string(arr[i], "stateId", p)), optional_string(arr[i], "description", p));
    }
    const ReportDocument report =
        ws.build_report(DocumentId(text(body, "documentId")), sections, optional_string(body, "title", "body", "Report"), user);
    return created(report_summary(report));
  }
  if (n == 2 && s[1] == "reports" && m == "GET") {
    json out = json::array();
    for (const auto& id : ws.report_ids()) out.push_back(report_summary(ws.report(id)));
    return ok(out);
  }
  if (n == 3 && s[1] == "reports" && m == "GET") {
    const ReportDocument report = ws.report(ReportId(s[2]));
    auto f = r.query.find("format");
    const std::string format = f == r.query.end() ? "json" : f->second;
    const std::string bytes = export_report(report, format);
    return {200, format == "html" ? "text/html; charset=utf-8" : "application/json", bytes};
  }

  not_found(r);
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

struct Service::Impl {
  httplib::Server server;
};

Service::~Service() { stop(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void Service::wait() {
  if (thread_.joinable()) thread_.join();
}

std::unique_ptr<Service> start_service(const ServiceConfig& config) {
  std::unique_ptr<Service> svc(new Service());
  svc->api_ = std::make_unique<Api>(config);
  svc->impl_ = std::make_unique<Service::Impl>();
  Api* api = svc->api_.get();

  auto handler = [api](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    for (const auto& [k, v] : req.headers) r.headers[lower(k)] = v;
    r.body = req.body;
    const HttpResponse out = api->handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& server = svc->impl_->server;
  const std::string pattern = R"(/v1/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Put(pattern, handler);
  server.Delete(pattern, handler);
  // No SO_REUSEPORT: a second instance on the same port must fail to bind.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  const std::string host = config.host();
  const int port = config.port();
  if (port == 0) {
    svc->port_ = server.bind_to_any_port(host);
    if (svc->port_ <= 0) fail(ErrorCode::BindFailure, "cannot bind " + host + " on any port");
  } else {
    if (!server.bind_to_port(host, port)) fail(ErrorCode::BindFailure, "cannot bind " + config.listen_address);
    svc->port_ = port;
  }
  svc->thread_ = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return svc;
}

}  // namespace casegraph
