#pragma once

// Central-database datasets (Evidence), update deltas and the back-end job
// list. File formats are documented in docs/dataset_schema.md.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "casegraph/codec.hpp"
#include "casegraph/model.hpp"

namespace casegraph {

struct Dataset {
  DatasetId id;
  std::string name;
  std::map<ObjectId, EntityObject> objects;
  std::map<RelationshipId, Relationship> relationships;
  std::int64_t version = 1;
  std::int64_t loaded_at = 0;  // ms since epoch

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct UpdateDelta {
  UpdateId id;
  DatasetId dataset;
  std::int64_t base_version = 0;
  std::vector<EntityObject> added_objects;
  std::vector<EntityObject> modified_objects;
  std::vector<ObjectId> removed_objects;
  std::vector<Relationship> added_relationships;
  std::vector<RelationshipId> removed_relationships;
  std::int64_t received_at = 0;
};

/// Element ids an update touches, used for staleness. A removed object also
/// touches its incident relationships; an added relationship touches both
/// endpoints.
struct TouchedIds {
  std::set<ObjectId> objects;
  std::set<RelationshipId> relationships;
};

/// Ids already used anywhere in the case, for duplicate detection.
struct CaseIds {
  std::set<std::string> objects;
  std::set<std::string> relationships;
};

/// Parses a dataset file and registers nothing. Elements are stamped as
/// Evidence of this dataset. Throws SchemaViolation (with path),
/// InvalidEvaluationCode, DuplicateId.
Dataset parse_dataset(const json& file, const CaseIds& taken, std::int64_t loaded_at);

/// Parses an update delta envelope. Throws SchemaViolation,
/// InvalidEvaluationCode.
UpdateDelta parse_delta(const json& file, std::int64_t received_at);

/// Applies `delta` in place, bumping the version by one. Throws
/// VersionMismatch, UnknownObject (modified/removed id missing),
/// DuplicateId, SchemaViolation (dangling endpoint).
TouchedIds apply_delta(Dataset& dataset, const UpdateDelta& delta, const CaseIds& taken);

/// Persisted form; parse with dataset_from_json.
json to_json(const Dataset& dataset);
Dataset dataset_from_json(const json& j, const std::string& path);
json to_json(const UpdateDelta& delta);

struct JobStatus {
  std::string id;
  std::string kind;
  enum class State { Queued, Running, Done, Failed } state = State::Queued;
  double progress = 0.0;

  friend bool operator==(const JobStatus&, const JobStatus&) = default;
};

std::string_view to_string(JobStatus::State s) noexcept;
json to_json(const JobStatus& job);
/// Parses the jobs fixture (array) and sorts by id. Throws SchemaViolation,
/// also when progress=1 and state=done disagree.
std::vector<JobStatus> jobs_from_json(const json& j, const std::string& path);

}  // namespace casegraph
