#pragma once

// On-disk document store. One append-only directory per document:
//
//   <dir>/states/<stateId>.json   canonical payload + metadata, written once
//   <dir>/branches.json           branches, timeline entries, log comments
//   <dir>/events.json             knowledge events and per-user dismissals
//   <dir>/document.json           document metadata and counters
//   <dir>/annotations.json        report flags, stale reasons, notes
//
// Every file is written to a temporary sibling and renamed into place. State
// files are written before the index that references them, so a crash can
// leave at most an unreferenced state file behind.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "casegraph/codec.hpp"
#include "casegraph/document.hpp"

namespace casegraph {

struct LoadWarning {
  std::string file;
  std::string message;
};

json to_json(const AnalysisState& state);
/// Parses and verifies a state file (payload hash and state id).
AnalysisState state_from_json(const json& j, const std::string& path);

json to_json(const KnowledgeEvent& event);
KnowledgeEvent event_from_json(const json& j, const std::string& path);

/// Writes `bytes` to `path` via temp file + rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
/// Throws IoError.
std::string read_file(const std::filesystem::path& path);

class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Persists new states and rewrites the index files.
  void save(const Document& doc);

  /// Loads a document directory. A state file that is missing, truncated or
  /// fails verification is reported and kept as a lost DAG node; every other
  /// state is served. Throws CorruptStore when the index files themselves are
  /// unreadable.
  static Document load(const std::filesystem::path& dir, std::vector<LoadWarning>& warnings,
                       Document::Clock clock = Document::system_clock());

  /// Marks the states present in `doc` as already on disk.
  void adopt(const Document& doc);

 private:
  std::filesystem::path dir_;
  std::set<StateId> written_;
};

}  // namespace casegraph
