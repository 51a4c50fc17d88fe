#pragma once

// A case workspace on disk:
//
//   <root>/cases/<caseId>/case.json            counters
//   <root>/cases/<caseId>/datasets/<id>.json   current dataset version
//   <root>/cases/<caseId>/updates/<id>.json    applied deltas and their reports
//   <root>/cases/<caseId>/documents/<id>/      one DocumentStore each
//   <root>/cases/<caseId>/reports/<id>.json    frozen reports
//   <root>/cases/<caseId>/jobs.json            back-end job fixture (optional)
//
// Dataset ingestion is serialized per case. Each document has its own
// reader/writer lock; mutations go through write() and are persisted before
// the lock is released.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "casegraph/document.hpp"
#include "casegraph/error.hpp"
#include "casegraph/ingestion.hpp"
#include "casegraph/persistence.hpp"
#include "casegraph/report.hpp"

namespace casegraph {

struct UpdateReport {
  UpdateId update;
  DatasetId dataset;
  std::int64_t version = 0;
  TouchedIds touched;
  std::map<DocumentId, std::set<StateId>> affected;
};

json to_json(const UpdateReport& report);

struct DraftInfo {
  DraftId id;
  DocumentId document;
  BranchId branch;
  StateId base;
  UserId owner;
};

class Case {
 public:
  using Clock = Document::Clock;

  /// Opens (creating if needed) <data_root>/cases/<id> and loads everything.
  /// Unrecoverable documents and state files are reported in warnings().
  Case(const std::filesystem::path& data_root, CaseId id, Clock clock = Document::system_clock());

  const CaseId& id() const noexcept { return id_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::vector<LoadWarning> warnings() const;

  // -- datasets ---------------------------------------------------------------
  DatasetId load_dataset(const json& file);
  std::vector<DatasetId> dataset_ids() const;
  Dataset dataset(const DatasetId& id) const;
  UpdateReport apply_update(const json& delta);
  std::vector<UpdateReport> updates() const;
  /// Evidence objects by id plus every dataset relationship touching them.
  std::pair<std::vector<EntityObject>, std::vector<Relationship>> evidence(const std::vector<ObjectId>& ids) const;
  std::vector<JobStatus> list_jobs() const;

  // -- documents --------------------------------------------------------------
  DocumentId create_document(const std::string& name, const std::vector<DatasetId>& datasets, const UserId& creator,
                             const std::optional<LayoutParams>& layout = std::nullopt);
  std::vector<DocumentId> document_ids() const;

  template <class F>
  decltype(auto) read(const DocumentId& id, F&& f) const {
    Slot& slot = find_slot(id);
    std::shared_lock lock(slot.mutex);
    return std::forward<F>(f)(static_cast<const Document&>(*slot.doc));
  }

  /// Runs `f` under the document's writer lock and persists the result.
  template <class F>
  decltype(auto) write(const DocumentId& id, F&& f) {
    Slot& slot = find_slot(id);
    std::unique_lock lock(slot.mutex);
    if constexpr (std::is_void_v<decltype(f(*slot.doc))>) {
      std::forward<F>(f)(*slot.doc);
      slot.store->save(*slot.doc);
    } else {
      auto result = std::forward<F>(f)(*slot.doc);
      slot.store->save(*slot.doc);
      return result;
    }
  }

  // -- drafts (in memory) -----------------------------------------------------
  DraftInfo open_draft(const DocumentId& doc, const BranchId& branch, const UserId& user);
  DraftInfo draft_info(const DraftId& id) const;
  /// Runs `f(StateDraft&)` under the draft lock. Only the owner gets there.
  template <class F>
  decltype(auto) edit_draft(const DraftId& id, const UserId& user, F&& f) {
    const std::shared_ptr<DraftSlot> slot = find_draft(id, user);
    std::lock_guard lock(slot->mutex);
    if (slot->draft.closed()) fail(ErrorCode::UnknownDraft, "draft " + id.str() + " is not open");
    return std::forward<F>(f)(slot->draft);
  }
  StateId commit_draft(const DraftId& id, const std::string& message, const UserId& user);
  void discard_draft(const DraftId& id, const UserId& user);

  // -- reports ----------------------------------------------------------------
  ReportDocument build_report(const DocumentId& doc, const std::vector<std::pair<StateId, std::string>>& sections,
                              const std::string& title, const UserId& author);
  ReportDocument report(const ReportId& id) const;
  std::vector<ReportId> report_ids() const;

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    std::unique_ptr<Document> doc;
    std::unique_ptr<DocumentStore> store;
  };
  struct DraftSlot {
    std::mutex mutex;
    DraftInfo info;
    StateDraft draft;
  };

  Slot& find_slot(const DocumentId& id) const;
  std::shared_ptr<DraftSlot> find_draft(const DraftId& id, const UserId& user);
  CaseIds taken_ids(const std::optional<DatasetId>& except) const;
  void save_counters() const;
  std::int64_t now() const { return clock_ ? clock_() : 0; }

  CaseId id_;
  std::filesystem::path dir_;
  Clock clock_;

  mutable std::shared_mutex mutex_;  // guards the maps below
  std::mutex ingest_mutex_;
  std::vector<LoadWarning> warnings_;
  std::map<DatasetId, Dataset> datasets_;
  std::vector<UpdateReport> updates_;
  std::map<DocumentId, std::unique_ptr<Slot>> docs_;
  std::map<DraftId, std::shared_ptr<DraftSlot>> drafts_;
  std::map<ReportId, ReportDocument> reports_;
  std::uint64_t next_document_ = 1;
  std::uint64_t next_report_ = 1;
  std::uint64_t next_draft_ = 1;
};

}  // namespace casegraph
