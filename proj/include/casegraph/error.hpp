#pragma once

// Engine error taxonomy. Every failure surfaces as casegraph::Error carrying a
// stable machine-readable code; the HTTP layer maps each code to exactly one
// status (see docs/http_api.md).

#include <stdexcept>
#include <string>
#include <string_view>

namespace casegraph {

enum class ErrorCode {
  // model
  CredibilityViolation,
  DraftClosed,
  UnknownObject,
  AttributeLocked,
  NotAuthor,
  WrongLevel,
  AlreadyGrouped,
  EmptySelection,
  ConflictingFlags,
  UnknownGroup,
  UnknownState,
  InvariantViolation,
  // layout
  EmptyGraph,
  AlreadyPlaced,
  RelayoutNotRequested,
  // provenance store
  UnknownDocument,
  UnknownBranch,
  UnknownDataset,
  DuplicateBranchName,
  NotBranchOwner,
  StaleDraft,
  CorruptStore,
  // diff / merge
  CrossDocumentDiff,
  UnresolvedConflict,
  InvalidSelection,
  // ingestion
  SchemaViolation,
  InvalidEvaluationCode,
  DuplicateId,
  VersionMismatch,
  NotStale,
  UnknownUpdate,
  UnknownEvent,
  // report
  UnflaggedState,
  UnsupportedFormat,
  UnknownReport,
  // service
  UnknownDraft,
  MissingIdentity,
  NotFound,
  BindFailure,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace casegraph
