#include "casegraph/error.hpp"

namespace casegraph {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CredibilityViolation: return "CredibilityViolation";
    case ErrorCode::DraftClosed: return "DraftClosed";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::AttributeLocked: return "AttributeLocked";
    case ErrorCode::NotAuthor: return "NotAuthor";
    case ErrorCode::WrongLevel: return "WrongLevel";
    case ErrorCode::AlreadyGrouped: return "AlreadyGrouped";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::ConflictingFlags: return "ConflictingFlags";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::UnknownState: return "UnknownState";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::AlreadyPlaced: return "AlreadyPlaced";
    case ErrorCode::RelayoutNotRequested: return "RelayoutNotRequested";
    case ErrorCode::UnknownDocument: return "UnknownDocument";
    case ErrorCode::UnknownBranch: return "UnknownBranch";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::DuplicateBranchName: return "DuplicateBranchName";
    case ErrorCode::NotBranchOwner: return "NotBranchOwner";
    case ErrorCode::StaleDraft: return "StaleDraft";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::CrossDocumentDiff: return "CrossDocumentDiff";
    case ErrorCode::UnresolvedConflict: return "UnresolvedConflict";
    case ErrorCode::InvalidSelection: return "InvalidSelection";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvalidEvaluationCode: return "InvalidEvaluationCode";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::NotStale: return "NotStale";
    case ErrorCode::UnknownUpdate: return "UnknownUpdate";
    case ErrorCode::UnknownEvent: return "UnknownEvent";
    case ErrorCode::UnflaggedState: return "UnflaggedState";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::UnknownReport: return "UnknownReport";
    case ErrorCode::UnknownDraft: return "UnknownDraft";
    case ErrorCode::MissingIdentity: return "MissingIdentity";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace casegraph
