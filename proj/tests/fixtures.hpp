#pragma once

// Shared builders for unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "casegraph/case.hpp"
#include "casegraph/codec.hpp"
#include "casegraph/document.hpp"
#include "casegraph/layout.hpp"

namespace fixtures {

using namespace casegraph;

inline EntityObject evidence_object(const std::string& id, const std::string& kind = "person",
                                    const std::string& name = "", const std::string& dataset = "ds") {
  EntityObject o;
  o.id = ObjectId(id);
  o.kind = kind;
  o.credibility = Credibility::Evidence;
  o.evaluation = EvaluationCode{'B', 2};
  o.source_dataset = DatasetId(dataset);
  o.attributes["name"] = AttributeValue{name.empty() ? id : name, Credibility::Evidence, std::nullopt};
  return o;
}

inline Relationship evidence_relationship(const std::string& id, const std::string& source, const std::string& target,
                                          const std::string& kind = "knows", const std::string& dataset = "ds") {
  Relationship r;
  r.id = RelationshipId(id);
  r.source = ObjectId(source);
  r.target = ObjectId(target);
  r.kind = kind;
  r.credibility = Credibility::Evidence;
  r.evaluation = EvaluationCode{'A', 1};
  r.source_dataset = DatasetId(dataset);
  return r;
}

/// Evidence payload with `n` objects e0..e{n-1} on a circle and a chain of
/// relationships between consecutive objects.
inline Payload evidence_payload(int n, int chain = -1) {
  Payload p;
  if (chain < 0) chain = n - 1;
  for (int i = 0; i < n; ++i) {
    EntityObject o = evidence_object("e" + std::to_string(i));
    p.visuals[o.id] = NodeVisual{o.id, Vec2{30.0 * i, 10.0 * (i % 3)}, false, false, std::nullopt};
    p.objects.emplace(o.id, std::move(o));
  }
  for (int i = 0; i < chain && i + 1 < n; ++i) {
    Relationship r = evidence_relationship("r" + std::to_string(i), "e" + std::to_string(i), "e" + std::to_string(i + 1));
    p.relationships.emplace(r.id, std::move(r));
  }
  return p;
}

/// Deterministic logical clock for reproducible state ids.
inline Document::Clock counter_clock() {
  auto t = std::make_shared<std::int64_t>(1'700'000'000'000);
  return [t] { return (*t) += 1000; };
}

inline Document make_document(const Payload& root, const std::string& creator = "alice", const std::string& id = "d1") {
  Document::Meta meta;
  meta.id = DocumentId(id);
  meta.name = "test document";
  meta.case_id = CaseId("case");
  meta.created_by = UserId(creator);
  return Document::create(meta, root, counter_clock());
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("casegraph-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) : path(temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline json dataset_file(const std::string& id, int n, const std::string& prefix) {
  json objects = json::array(), rels = json::array();
  for (int i = 0; i < n; ++i) {
    objects.push_back({{"id", prefix + std::to_string(i)},
                       {"kind", i % 2 ? "vehicle" : "person"},
                       {"eval", "B2"},
                       {"attributes", {{"name", prefix + " " + std::to_string(i)}, {"age", 30 + i}}}});
  }
  for (int i = 0; i + 1 < n; ++i) {
    rels.push_back({{"id", prefix + "-rel" + std::to_string(i)},
                    {"source", prefix + std::to_string(i)},
                    {"target", prefix + std::to_string(i + 1)},
                    {"kind", "knows"},
                    {"eval", "C3"}});
  }
  return {{"id", id}, {"name", "dataset " + id}, {"objects", objects}, {"relationships", rels}};
}

}  // namespace fixtures
