#include "casegraph/case.hpp"

#include <algorithm>

namespace casegraph {

namespace fs = std::filesystem;

namespace {

json ids_to_json(const auto& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

json parse_file(const fs::path& file) {
  json j = json::parse(read_file(file), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::CorruptStore, file.string() + ": not valid JSON");
  return j;
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

UpdateReport update_report_from_json(const json& j, const std::string& path) {
  UpdateReport r;
  r.update = UpdateId(require_string(j, "updateId", path));
  r.dataset = DatasetId(require_string(j, "datasetId", path));
  r.version = require(j, "version", path).get<std::int64_t>();
  for (const auto& id : require(j, "touchedObjects", path)) r.touched.objects.emplace(id.get<std::string>());
  for (const auto& id : require(j, "touchedRelationships", path)) r.touched.relationships.emplace(id.get<std::string>());
  for (const auto& [doc, states] : require(j, "affectedStates", path).items()) {
    auto& set = r.affected[DocumentId(doc)];
    for (const auto& s : states) set.emplace(s.get<std::string>());
  }
  return r;
}

}  // namespace

json to_json(const UpdateReport& r) {
  json affected = json::object();
  for (const auto& [doc, states] : r.affected) affected[doc.str()] = ids_to_json(states);
  return {{"updateId", r.update.str()},
          {"datasetId", r.dataset.str()},
          {"version", r.version},
          {"touchedObjects", ids_to_json(r.touched.objects)},
          {"touchedRelationships", ids_to_json(r.touched.relationships)},
          {"affectedStates", affected}};
}

Case::Case(const fs::path& data_root, CaseId id, Clock clock)
    : id_(std::move(id)), dir_(data_root / "cases" / id_.str()), clock_(std::move(clock)) {
  std::error_code ec;
  for (const char* sub : {"datasets", "updates", "documents", "reports"}) {
    fs::create_directories(dir_ / sub, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + (dir_ / sub).string() + ": " + ec.message());
  }

  if (fs::exists(dir_ / "case.json")) {
    try {
      const json c = parse_file(dir_ / "case.json");
      next_document_ = c.value("nextDocument", std::uint64_t{1});
      next_report_ = c.value("nextReport", std::uint64_t{1});
    } catch (const std::exception& e) {
      warnings_.push_back({(dir_ / "case.json").string(), e.what()});
    }
  }

  for (const auto& file : json_files(dir_ / "datasets")) {
    try {
      Dataset d = dataset_from_json(parse_file(file), file.filename().string());
      datasets_.emplace(d.id, std::move(d));
    } catch (const std::exception& e) {
      warnings_.push_back({file.string(), e.what()});
    }
  }

  std::vector<std::pair<std::int64_t, UpdateReport>> updates;
  for (const auto& file : json_files(dir_ / "updates")) {
    try {
      const json j = parse_file(file);
      updates.emplace_back(require(j, "sequence", "update").get<std::int64_t>(),
                           update_report_from_json(require(j, "report", "update"), "update.report"));
    } catch (const std::exception& e) {
      warnings_.push_back({file.string(), e.what()});
    }
  }
  std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, r] : updates) updates_.push_back(std::move(r));

  if (fs::is_directory(dir_ / "documents")) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(dir_ / "documents")) {
      if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      try {
        auto slot = std::make_unique<Slot>();
        slot->doc = std::make_unique<Document>(DocumentStore::load(d, warnings_, clock_));
        slot->store = std::make_unique<DocumentStore>(d);
        slot->store->adopt(*slot->doc);
        const DocumentId doc_id = slot->doc->id();
        docs_.emplace(doc_id, std::move(slot));
      } catch (const std::exception& e) {
        warnings_.push_back({d.string(), e.what()});
      }
    }
  }

  for (const auto& file : json_files(dir_ / "reports")) {
    try {
      ReportDocument r = report_from_json(parse_file(file));
      reports_.emplace(r.id, std::move(r));
    } catch (const std::exception& e) {
      warnings_.push_back({file.string(), e.what()});
    }
  }
}

std::vector<LoadWarning> Case::warnings() const {
  std::shared_lock lock(mutex_);
  return warnings_;
}

void Case::save_counters() const {
  write_file_atomic(dir_ / "case.json",
                    canonical_dump({{"caseId", id_.str()}, {"nextDocument", next_document_}, {"nextReport", next_report_}}));
}

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

CaseIds Case::taken_ids(const std::optional<DatasetId>& except) const {
  CaseIds out;
  for (const auto& [id, d] : datasets_) {
    if (except && id == *except) continue;
    for (const auto& [oid, _] : d.objects) out.objects.insert(oid.str());
    for (const auto& [rid, _] : d.relationships) out.relationships.insert(rid.str());
  }
  return out;
}

DatasetId Case::load_dataset(const json& file) {
  std::lock_guard ingest(ingest_mutex_);
  CaseIds taken;
  {
    std::shared_lock lock(mutex_);
    taken = taken_ids(std::nullopt);
    if (file.is_object() && file.contains("id") && file["id"].is_string() &&
        datasets_.contains(DatasetId(file["id"].get<std::string>()))) {
      fail(ErrorCode::DuplicateId, "dataset id " + file["id"].get<std::string>());
    }
  }
  Dataset d = parse_dataset(file, taken, now());
  write_file_atomic(dir_ / "datasets" / (d.id.str() + ".json"), canonical_dump(to_json(d)));
  const DatasetId id = d.id;
  std::unique_lock lock(mutex_);
  datasets_.emplace(id, std::move(d));
  return id;
}

std::vector<DatasetId> Case::dataset_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<DatasetId> out;
  for (const auto& [id, _] : datasets_) out.push_back(id);
  return out;
}

Dataset Case::dataset(const DatasetId& id) const {
  std::shared_lock lock(mutex_);
  auto it = datasets_.find(id);
  if (it == datasets_.end()) fail(ErrorCode::UnknownDataset, "dataset " + id.str() + " not loaded in case " + id_.str());
  return it->second;
}

UpdateReport Case::apply_update(const json& file) {
  std::lock_guard ingest(ingest_mutex_);
  const UpdateDelta delta = parse_delta(file, now());
  Dataset next;
  CaseIds taken;
  {
    std::shared_lock lock(mutex_);
    auto it = datasets_.find(delta.dataset);
    if (it == datasets_.end()) {
      fail(ErrorCode::UnknownDataset, "dataset " + delta.dataset.str() + " not loaded in case " + id_.str());
    }
    for (const auto& u : updates_) {
      if (u.update == delta.id) fail(ErrorCode::DuplicateId, "update " + delta.id.str() + " was already applied");
    }
    next = it->second;
    taken = taken_ids(delta.dataset);
  }

  UpdateReport report;
  report.update = delta.id;
  report.dataset = delta.dataset;
  report.touched = apply_delta(next, delta, taken);
  report.version = next.version;

  write_file_atomic(dir_ / "datasets" / (next.id.str() + ".json"), canonical_dump(to_json(next)));
  {
    std::unique_lock lock(mutex_);
    datasets_[next.id] = std::move(next);
  }

  for (const auto& doc_id : document_ids()) {
    std::set<StateId> flagged = write(doc_id, [&](Document& doc) {
      return doc.mark_stale(report.touched.objects, report.touched.relationships, delta.id);
    });
    if (!flagged.empty()) report.affected.emplace(doc_id, std::move(flagged));
  }

  std::unique_lock lock(mutex_);
  const json record = {{"sequence", updates_.size()}, {"delta", to_json(delta)}, {"report", to_json(report)}};
  write_file_atomic(dir_ / "updates" / (delta.id.str() + ".json"), canonical_dump(record));
  updates_.push_back(report);
  return report;
}

std::vector<UpdateReport> Case::updates() const {
  std::shared_lock lock(mutex_);
  return updates_;
}

std::pair<std::vector<EntityObject>, std::vector<Relationship>> Case::evidence(const std::vector<ObjectId>& ids) const {
  std::shared_lock lock(mutex_);
  std::pair<std::vector<EntityObject>, std::vector<Relationship>> out;
  const std::set<ObjectId> wanted(ids.begin(), ids.end());
  for (const auto& id : wanted) {
    bool found = false;
    for (const auto& [_, d] : datasets_) {
      if (auto it = d.objects.find(id); it != d.objects.end()) {
        out.first.push_back(it->second);
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorCode::UnknownObject, "object " + id.str() + " is in no dataset of case " + id_.str());
  }
  for (const auto& [_, d] : datasets_) {
    for (const auto& [rid, r] : d.relationships) {
      if (wanted.contains(r.source) || wanted.contains(r.target)) out.second.push_back(r);
    }
  }
  return out;
}

std::vector<JobStatus> Case::list_jobs() const {
  const fs::path file = dir_ / "jobs.json";
  if (!fs::exists(file)) return {};
  return jobs_from_json(parse_file(file), "jobs");
}

// ---------------------------------------------------------------------------
// documents
// ---------------------------------------------------------------------------

Case::Slot& Case::find_slot(const DocumentId& id) const {
  std::shared_lock lock(mutex_);
  auto it = docs_.find(id);
  if (it == docs_.end()) fail(ErrorCode::UnknownDocument, "document " + id.str() + " not in case " + id_.str());
  return *it->second;
}

DocumentId Case::create_document(const std::string& name, const std::vector<DatasetId>& datasets,
                                 const UserId& creator, const std::optional<LayoutParams>& layout) {
  Payload root;
  {
    std::shared_lock lock(mutex_);
    for (const auto& did : datasets) {
      auto it = datasets_.find(did);
      if (it == datasets_.end()) fail(ErrorCode::UnknownDataset, "dataset " + did.str() + " not loaded in case " + id_.str());
      for (const auto& [oid, o] : it->second.objects) root.objects.emplace(oid, o);
      for (const auto& [rid, r] : it->second.relationships) root.relationships.emplace(rid, r);
    }
  }
  drop_dangling_relationships(root);
  const LayoutParams params = layout.value_or(LayoutParams{});
  params.validate();
  PositionMap positions;
  if (!root.objects.empty()) positions = initial_layout(layout_graph_of(root), params);
  for (const auto& [oid, _] : root.objects) root.visuals.emplace(oid, NodeVisual{oid, positions.at(oid), false, false, std::nullopt});

  std::unique_lock lock(mutex_);
  const DocumentId id("d" + std::to_string(next_document_++));
  save_counters();
  Document::Meta meta;
  meta.id = id;
  meta.name = name;
  meta.case_id = id_;
  meta.initial_datasets = datasets;
  meta.created_by = creator;
  meta.layout = params;

  auto slot = std::make_unique<Slot>();
  slot->doc = std::make_unique<Document>(Document::create(std::move(meta), std::move(root), clock_));
  slot->store = std::make_unique<DocumentStore>(dir_ / "documents" / id.str());
  slot->store->save(*slot->doc);
  docs_.emplace(id, std::move(slot));
  return id;
}

std::vector<DocumentId> Case::document_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<DocumentId> out;
  for (const auto& [id, _] : docs_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// drafts
// ---------------------------------------------------------------------------

DraftInfo Case::open_draft(const DocumentId& doc, const BranchId& branch, const UserId& user) {
  StateDraft draft = read(doc, [&](const Document& d) { return d.open_draft(branch, user); });
  std::unique_lock lock(mutex_);
  DraftInfo info{DraftId("draft-" + std::to_string(next_draft_++)), doc, branch, draft.base(), user};
  auto slot = std::shared_ptr<DraftSlot>(new DraftSlot{{}, info, std::move(draft)});
  drafts_.emplace(info.id, std::move(slot));
  return info;
}

std::shared_ptr<Case::DraftSlot> Case::find_draft(const DraftId& id, const UserId& user) {
  std::shared_lock lock(mutex_);
  auto it = drafts_.find(id);
  if (it == drafts_.end()) fail(ErrorCode::UnknownDraft, "draft " + id.str() + " is not open");
  if (it->second->info.owner != user) fail(ErrorCode::NotAuthor, user.str() + " does not own draft " + id.str());
  return it->second;
}

DraftInfo Case::draft_info(const DraftId& id) const {
  std::shared_lock lock(mutex_);
  auto it = drafts_.find(id);
  if (it == drafts_.end()) fail(ErrorCode::UnknownDraft, "draft " + id.str() + " is not open");
  return it->second->info;
}

StateId Case::commit_draft(const DraftId& id, const std::string& message, const UserId& user) {
  const std::shared_ptr<DraftSlot> slot = find_draft(id, user);
  std::lock_guard draft_lock(slot->mutex);
  if (slot->draft.closed()) fail(ErrorCode::UnknownDraft, "draft " + id.str() + " is not open");
  const StateId state = write(slot->info.document, [&](Document& doc) {
    return doc.commit_state(slot->info.branch, slot->draft, message, user);
  });
  std::unique_lock lock(mutex_);
  drafts_.erase(id);
  return state;
}

void Case::discard_draft(const DraftId& id, const UserId& user) {
  const std::shared_ptr<DraftSlot> slot = find_draft(id, user);
  std::lock_guard draft_lock(slot->mutex);
  slot->draft.close();
  std::unique_lock lock(mutex_);
  drafts_.erase(id);
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

ReportDocument Case::build_report(const DocumentId& doc, const std::vector<std::pair<StateId, std::string>>& sections,
                                  const std::string& title, const UserId& author) {
  // The writer lock reads report flags atomically with respect to commits.
  Slot& slot = find_slot(doc);
  ReportDocument report;
  {
    std::unique_lock doc_lock(slot.mutex);
    std::uint64_t n;
    {
      std::unique_lock lock(mutex_);
      n = next_report_;
    }
    report = casegraph::build_report(*slot.doc, sections, title, author, ReportId("report-" + std::to_string(n)), now());
  }
  std::unique_lock lock(mutex_);
  report.id = ReportId("report-" + std::to_string(next_report_++));
  save_counters();
  write_file_atomic(dir_ / "reports" / (report.id.str() + ".json"), export_report(report, "json"));
  reports_.emplace(report.id, report);
  return report;
}

ReportDocument Case::report(const ReportId& id) const {
  std::shared_lock lock(mutex_);
  auto it = reports_.find(id);
  if (it == reports_.end()) fail(ErrorCode::UnknownReport, "report " + id.str() + " not in case " + id_.str());
  return it->second;
}

std::vector<ReportId> Case::report_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<ReportId> out;
  for (const auto& [id, _] : reports_) out.push_back(id);
  return out;
}

}  // namespace casegraph
