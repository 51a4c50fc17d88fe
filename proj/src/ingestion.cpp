#include "casegraph/ingestion.hpp"

#include <algorithm>
#include <cmath>

#include "casegraph/error.hpp"

namespace casegraph {

namespace {

Value plain_value(const json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) {
    const double d = j.get<double>();
    if (!std::isfinite(d)) fail(ErrorCode::SchemaViolation, path + ": number must be finite");
    return d;
  }
  if (j.is_object() && j.size() == 1 && j.contains("date") && j["date"].is_string()) {
    const std::string iso = j["date"].get<std::string>();
    const bool shape = iso.size() == 10 && iso[4] == '-' && iso[7] == '-' &&
                       std::all_of(iso.begin(), iso.end(), [](char c) { return c == '-' || (c >= '0' && c <= '9'); });
    if (!shape) fail(ErrorCode::SchemaViolation, path + ": date must be YYYY-MM-DD");
    return Date{iso};
  }
  fail(ErrorCode::SchemaViolation, path + ": expected string, number or {\"date\": \"YYYY-MM-DD\"}");
}

json plain_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Date>) return json{{"date", x.iso}};
        else return json(x);
      },
      v);
}

AttributeMap evidence_attributes(const json& element, const std::string& path) {
  AttributeMap out;
  auto it = element.find("attributes");
  if (it == element.end()) return out;
  require_object(*it, path + ".attributes");
  for (const auto& [k, v] : it->items()) {
    out.emplace(k, AttributeValue{plain_value(v, path + ".attributes." + k), Credibility::Evidence, std::nullopt});
  }
  return out;
}

json attributes_to_file(const AttributeMap& attrs) {
  json out = json::object();
  for (const auto& [k, a] : attrs) out[k] = plain_to_json(a.value);
  return out;
}

std::string element_id(const json& j, const std::string& path) {
  require_object(j, path);
  std::string id = require_string(j, "id", path);
  if (id.empty()) fail(ErrorCode::SchemaViolation, path + ".id: must not be empty");
  if (id.front() == '~') fail(ErrorCode::SchemaViolation, path + ".id: '~' prefix is reserved for analyst data");
  return id;
}

EvaluationCode parse_eval(const json& j, const std::string& path) {
  const std::string code = require_string(j, "eval", path);
  try {
    return EvaluationCode::parse(code);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidEvaluationCode, path + ".eval: " + e.detail());
  }
}

EntityObject parse_object(const json& j, const std::string& path, const DatasetId& dataset) {
  EntityObject o;
  o.id = ObjectId(element_id(j, path));
  o.kind = require_string(j, "kind", path);
  if (o.kind == "placeholder") fail(ErrorCode::SchemaViolation, path + ".kind: placeholders are analyst-only");
  o.evaluation = parse_eval(j, path);
  o.attributes = evidence_attributes(j, path);
  o.credibility = Credibility::Evidence;
  o.source_dataset = dataset;
  return o;
}

Relationship parse_relationship(const json& j, const std::string& path, const DatasetId& dataset) {
  Relationship r;
  r.id = RelationshipId(element_id(j, path));
  r.source = ObjectId(require_string(j, "source", path));
  r.target = ObjectId(require_string(j, "target", path));
  r.kind = require_string(j, "kind", path);
  r.directed = optional_bool(j, "directed", path, true);
  r.evaluation = parse_eval(j, path);
  r.attributes = evidence_attributes(j, path);
  r.credibility = Credibility::Evidence;
  r.source_dataset = dataset;
  return r;
}

json object_to_file(const EntityObject& o) {
  return {{"id", o.id.str()}, {"kind", o.kind}, {"eval", o.evaluation->str()}, {"attributes", attributes_to_file(o.attributes)}};
}

json relationship_to_file(const Relationship& r) {
  return {{"id", r.id.str()},           {"source", r.source.str()},
          {"target", r.target.str()},   {"kind", r.kind},
          {"directed", r.directed},     {"eval", r.evaluation->str()},
          {"attributes", attributes_to_file(r.attributes)}};
}

const json& array_field(const json& j, const char* key, const std::string& path) {
  static const json empty = json::array();
  auto it = j.find(key);
  if (it == j.end()) return empty;
  require_array(*it, path + "." + key);
  return *it;
}

void check_endpoints(const Dataset& d, const Relationship& r, const std::string& path) {
  for (const ObjectId* end : {&r.source, &r.target}) {
    if (!d.objects.contains(*end)) {
      fail(ErrorCode::SchemaViolation, path + ": endpoint " + end->str() + " is not an object of dataset " + d.id.str());
    }
  }
}

std::int64_t require_int(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number_integer()) fail(ErrorCode::SchemaViolation, path + "." + key + ": expected integer");
  return v.get<std::int64_t>();
}

}  // namespace

Dataset parse_dataset(const json& file, const CaseIds& taken, std::int64_t loaded_at) {
  const std::string path = "dataset";
  require_object(file, path);
  Dataset d;
  d.id = DatasetId(element_id(file, path));
  d.name = optional_string(file, "name", path, d.id.str());
  d.version = 1;
  d.loaded_at = loaded_at;

  const json& objects = array_field(file, "objects", path);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = path + ".objects[" + std::to_string(i) + "]";
    EntityObject o = parse_object(objects[i], p, d.id);
    if (taken.objects.contains(o.id.str()) || d.objects.contains(o.id)) {
      fail(ErrorCode::DuplicateId, "object id " + o.id.str() + " (" + p + ")");
    }
    d.objects.emplace(o.id, std::move(o));
  }
  const json& rels = array_field(file, "relationships", path);
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const std::string p = path + ".relationships[" + std::to_string(i) + "]";
    Relationship r = parse_relationship(rels[i], p, d.id);
    if (taken.relationships.contains(r.id.str()) || d.relationships.contains(r.id)) {
      fail(ErrorCode::DuplicateId, "relationship id " + r.id.str() + " (" + p + ")");
    }
    check_endpoints(d, r, p);
    d.relationships.emplace(r.id, std::move(r));
  }
  return d;
}

UpdateDelta parse_delta(const json& file, std::int64_t received_at) {
  const std::string path = "update";
  require_object(file, path);
  UpdateDelta u;
  u.id = UpdateId(element_id(file, path));
  u.dataset = DatasetId(require_string(file, "datasetId", path));
  u.base_version = require_int(file, "baseVersion", path);
  u.received_at = received_at;

  const json& added = array_field(file, "addedObjects", path);
  for (std::size_t i = 0; i < added.size(); ++i) {
    u.added_objects.push_back(parse_object(added[i], path + ".addedObjects[" + std::to_string(i) + "]", u.dataset));
  }
  const json& modified = array_field(file, "modifiedObjects", path);
  for (std::size_t i = 0; i < modified.size(); ++i) {
    u.modified_objects.push_back(parse_object(modified[i], path + ".modifiedObjects[" + std::to_string(i) + "]", u.dataset));
  }
  const json& removed = array_field(file, "removedObjectIds", path);
  for (std::size_t i = 0; i < removed.size(); ++i) {
    if (!removed[i].is_string()) fail(ErrorCode::SchemaViolation, path + ".removedObjectIds[" + std::to_string(i) + "]: expected string");
    u.removed_objects.emplace_back(removed[i].get<std::string>());
  }
  const json& added_rels = array_field(file, "addedRelationships", path);
  for (std::size_t i = 0; i < added_rels.size(); ++i) {
    u.added_relationships.push_back(
        parse_relationship(added_rels[i], path + ".addedRelationships[" + std::to_string(i) + "]", u.dataset));
  }
  const json& removed_rels = array_field(file, "removedRelationshipIds", path);
  for (std::size_t i = 0; i < removed_rels.size(); ++i) {
    if (!removed_rels[i].is_string()) {
      fail(ErrorCode::SchemaViolation, path + ".removedRelationshipIds[" + std::to_string(i) + "]: expected string");
    }
    u.removed_relationships.emplace_back(removed_rels[i].get<std::string>());
  }
  return u;
}

TouchedIds apply_delta(Dataset& dataset, const UpdateDelta& delta, const CaseIds& taken) {
  if (delta.dataset != dataset.id) {
    fail(ErrorCode::UnknownDataset, "update " + delta.id.str() + " targets " + delta.dataset.str());
  }
  if (delta.base_version != dataset.version) {
    fail(ErrorCode::VersionMismatch, "update " + delta.id.str() + " expects version " +
                                         std::to_string(delta.base_version) + ", dataset " + dataset.id.str() +
                                         " is at " + std::to_string(dataset.version));
  }
  // Validate everything against a copy so a failing delta leaves no trace.
  Dataset next = dataset;
  TouchedIds touched;

  for (const auto& o : delta.modified_objects) {
    auto it = next.objects.find(o.id);
    if (it == next.objects.end()) fail(ErrorCode::UnknownObject, "modified object " + o.id.str() + " not in dataset");
    it->second = o;
    touched.objects.insert(o.id);
  }
  for (const auto& id : delta.removed_relationships) {
    if (!next.relationships.erase(id)) fail(ErrorCode::UnknownObject, "removed relationship " + id.str() + " not in dataset");
    touched.relationships.insert(id);
  }
  for (const auto& id : delta.removed_objects) {
    if (!next.objects.erase(id)) fail(ErrorCode::UnknownObject, "removed object " + id.str() + " not in dataset");
    touched.objects.insert(id);
    for (auto it = next.relationships.begin(); it != next.relationships.end();) {
      if (it->second.source == id || it->second.target == id) {
        touched.relationships.insert(it->first);
        it = next.relationships.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const auto& o : delta.added_objects) {
    if (taken.objects.contains(o.id.str()) || next.objects.contains(o.id)) {
      fail(ErrorCode::DuplicateId, "added object id " + o.id.str());
    }
    next.objects.emplace(o.id, o);
    touched.objects.insert(o.id);
  }
  for (const auto& r : delta.added_relationships) {
    if (taken.relationships.contains(r.id.str()) || next.relationships.contains(r.id)) {
      fail(ErrorCode::DuplicateId, "added relationship id " + r.id.str());
    }
    check_endpoints(next, r, "update.addedRelationships." + r.id.str());
    next.relationships.emplace(r.id, r);
    touched.relationships.insert(r.id);
    touched.objects.insert(r.source);
    touched.objects.insert(r.target);
  }
  next.version = dataset.version + 1;
  dataset = std::move(next);
  return touched;
}

json to_json(const Dataset& d) {
  json objects = json::array(), rels = json::array();
  for (const auto& [_, o] : d.objects) objects.push_back(object_to_file(o));
  for (const auto& [_, r] : d.relationships) rels.push_back(relationship_to_file(r));
  return {{"id", d.id.str()},          {"name", d.name},        {"version", d.version},
          {"loadedAt", d.loaded_at},   {"objects", objects},    {"relationships", rels}};
}

Dataset dataset_from_json(const json& j, const std::string& path) {
  Dataset d = parse_dataset(j, CaseIds{}, 0);
  d.version = require_int(j, "version", path);
  d.loaded_at = require_int(j, "loadedAt", path);
  if (d.version < 1) fail(ErrorCode::SchemaViolation, path + ".version: must be >= 1");
  return d;
}

json to_json(const UpdateDelta& u) {
  json added = json::array(), modified = json::array(), removed = json::array(), added_rels = json::array(),
       removed_rels = json::array();
  for (const auto& o : u.added_objects) added.push_back(object_to_file(o));
  for (const auto& o : u.modified_objects) modified.push_back(object_to_file(o));
  for (const auto& id : u.removed_objects) removed.push_back(id.str());
  for (const auto& r : u.added_relationships) added_rels.push_back(relationship_to_file(r));
  for (const auto& id : u.removed_relationships) removed_rels.push_back(id.str());
  return {{"id", u.id.str()},
          {"datasetId", u.dataset.str()},
          {"baseVersion", u.base_version},
          {"receivedAt", u.received_at},
          {"addedObjects", added},
          {"modifiedObjects", modified},
          {"removedObjectIds", removed},
          {"addedRelationships", added_rels},
          {"removedRelationshipIds", removed_rels}};
}

std::string_view to_string(JobStatus::State s) noexcept {
  switch (s) {
    case JobStatus::State::Queued: return "queued";
    case JobStatus::State::Running: return "running";
    case JobStatus::State::Done: return "done";
    case JobStatus::State::Failed: return "failed";
  }
  return "unknown";
}

json to_json(const JobStatus& job) {
  return {{"id", job.id}, {"kind", job.kind}, {"state", std::string(to_string(job.state))}, {"progress", job.progress}};
}

std::vector<JobStatus> jobs_from_json(const json& j, const std::string& path) {
  require_array(j, path);
  std::vector<JobStatus> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    require_object(j[i], p);
    JobStatus job;
    job.id = require_string(j[i], "id", p);
    job.kind = require_string(j[i], "kind", p);
    const std::string state = require_string(j[i], "state", p);
    if (state == "queued") job.state = JobStatus::State::Queued;
    else if (state == "running") job.state = JobStatus::State::Running;
    else if (state == "done") job.state = JobStatus::State::Done;
    else if (state == "failed") job.state = JobStatus::State::Failed;
    else fail(ErrorCode::SchemaViolation, p + ".state: expected queued|running|done|failed");
    const json& progress = require(j[i], "progress", p);
    if (!progress.is_number()) fail(ErrorCode::SchemaViolation, p + ".progress: expected number");
    job.progress = progress.get<double>();
    if (!(job.progress >= 0.0 && job.progress <= 1.0)) fail(ErrorCode::SchemaViolation, p + ".progress: outside [0, 1]");
    if ((job.progress == 1.0) != (job.state == JobStatus::State::Done)) {
      fail(ErrorCode::SchemaViolation, p + ": progress=1 exactly when state=done");
    }
    out.push_back(std::move(job));
  }
  std::sort(out.begin(), out.end(), [](const JobStatus& a, const JobStatus& b) { return a.id < b.id; });
  return out;
}

}  // namespace casegraph
