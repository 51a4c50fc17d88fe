#pragma once

// Difference table between two viewer-resolved analysis states and merge
// from an explicit analyst selection.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "casegraph/codec.hpp"
#include "casegraph/document.hpp"
#include "casegraph/visibility.hpp"

namespace casegraph {

struct ElementRef {
  enum class Kind { Object, Relationship };
  Kind kind = Kind::Object;
  std::string id;

  static ElementRef object(const ObjectId& id) { return {Kind::Object, id.str()}; }
  static ElementRef relationship(const RelationshipId& id) { return {Kind::Relationship, id.str()}; }

  friend auto operator<=>(const ElementRef&, const ElementRef&) = default;
  friend bool operator==(const ElementRef&, const ElementRef&) = default;
};

/// Groups are matched across states by name.
struct GroupDiff {
  std::set<std::string> equal;
  std::set<std::string> only_a;
  std::set<std::string> only_b;
  std::set<std::string> conflicting;

  friend bool operator==(const GroupDiff&, const GroupDiff&) = default;
};

struct VisualDifference {
  ObjectId object;
  NodeVisual a;
  NodeVisual b;

  friend bool operator==(const VisualDifference&, const VisualDifference&) = default;
};

struct DiffResult {
  StateId state_a;
  StateId state_b;
  std::set<ElementRef> equal;
  std::set<ElementRef> only_a;
  std::set<ElementRef> only_b;
  /// Same id present on both sides with differing content.
  std::set<ElementRef> conflicting;
  GroupDiff groups;
  std::vector<VisualDifference> visuals;

  bool identical() const noexcept { return only_a.empty() && only_b.empty() && conflicting.empty(); }
};

/// Element equality: same id, kind, attribute map (keys, values, levels),
/// credibility and provenance; relationships additionally compare endpoints
/// and direction.
DiffResult diff_payloads(const Payload& a, const Payload& b);

/// Both states resolved for `viewer` first, so invisible assumptions never
/// enter the table.
DiffResult diff(const Document& doc, const StateId& a, const StateId& b, const UserId& viewer);

/// Cross-document variant. Throws CrossDocumentDiff unless both refer to
/// the same document.
DiffResult diff(const Document& doc_a, const StateId& a, const Document& doc_b, const StateId& b,
                const UserId& viewer);

/// Three-column difference table (onlyA | equal | onlyB) plus conflicts.
json to_json(const DiffResult& diff);

enum class Side { A, B };

struct MergeSelection {
  bool include_equal = true;
  std::set<ElementRef> chosen_only_a;
  std::set<ElementRef> chosen_only_b;
  std::map<ElementRef, Side> conflict_resolutions;
  /// Group names per side.
  std::set<std::pair<Side, std::string>> chosen_groups;
  Side layout_source = Side::A;

  /// Everything from both sides; conflicts resolved towards `prefer`.
  static MergeSelection everything(const DiffResult& diff, Side prefer = Side::A);
};

json to_json(const MergeSelection& selection);
MergeSelection merge_selection_from_json(const json& j, const std::string& path = "selection");

struct MergeResult {
  StateId state;
  std::vector<RelationshipId> dropped_relationships;
  std::vector<std::string> dropped_groups;
  /// Nodes that two chosen groups both claimed; kept in the first.
  std::vector<ObjectId> regrouped_nodes;
};

json to_json(const MergeResult& result);

/// Builds the merged payload without committing. Exposed for tests and
/// previews.
Payload build_merge_payload(const VisibleGraph& a, const VisibleGraph& b, const DiffResult& diff,
                            const MergeSelection& selection, IdSource& ids, const LayoutParams& layout,
                            MergeResult& report);

/// Validates the selection against diff(a, b, author) and appends a state
/// with parents [a, b] to `target`.
MergeResult merge(Document& doc, const BranchId& target, const StateId& a, const StateId& b,
                  const MergeSelection& selection, const UserId& author, const std::string& message = "merge");

}  // namespace casegraph
