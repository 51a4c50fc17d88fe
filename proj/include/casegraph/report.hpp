#pragma once

// Final reports: frozen copies of flagged analysis states, in analyst order,
// with descriptions. Exported as canonical JSON or static HTML.

#include <string>
#include <utility>
#include <vector>

#include "casegraph/codec.hpp"
#include "casegraph/document.hpp"

namespace casegraph {

struct ReportSection {
  StateId state;
  /// Author's view of the state at build time.
  Payload snapshot;
  PositionMap positions;
  std::string description;

  friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct ReportDocument {
  static constexpr int kFormatVersion = 1;

  ReportId id;
  CaseId case_id;
  DocumentId document;
  std::string title;
  UserId created_by;
  std::int64_t created_at = 0;
  std::vector<ReportSection> sections;
  int format_version = kFormatVersion;

  friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

/// Throws EmptySelection, UnknownState, UnflaggedState.
ReportDocument build_report(const Document& doc, const std::vector<std::pair<StateId, std::string>>& sections,
                            const std::string& title, const UserId& author, ReportId id, std::int64_t created_at);

json to_json(const ReportDocument& report);
ReportDocument report_from_json(const json& j, const std::string& path = "report");

/// SHA-256 of the canonical JSON export.
std::string report_hash(const ReportDocument& report);

/// "json" or "html"; anything else throws UnsupportedFormat.
std::string export_report(const ReportDocument& report, const std::string& format);

std::string render_html(const ReportDocument& report);

}  // namespace casegraph
