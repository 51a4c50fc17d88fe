#pragma once

// Graph elements, credibility semantics, groups and per-node visual state.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "casegraph/ids.hpp"

namespace casegraph {

// ---------------------------------------------------------------------------
// Credibility
// ---------------------------------------------------------------------------

/// Trust tier of a datum. A larger level number means less trusted.
enum class Credibility : int { Evidence = 1, Knowledge = 2, Assumption = 3 };

inline constexpr Credibility kAllCredibilities[] = {Credibility::Evidence, Credibility::Knowledge,
                                                    Credibility::Assumption};

constexpr int level_number(Credibility c) noexcept { return static_cast<int>(c); }

/// Filled signalling dots shown beside an element: the more dots, the more trusted.
constexpr int dot_count(Credibility c) noexcept { return 4 - level_number(c); }

/// Inverse of dot_count. Throws InvariantViolation outside 1..3.
Credibility credibility_from_dots(int dots);
Credibility credibility_from_level(int level);

/// The less trusted of two levels.
constexpr Credibility least_trusted(Credibility a, Credibility b) noexcept {
  return level_number(a) >= level_number(b) ? a : b;
}

std::string_view to_string(Credibility c) noexcept;

/// Grade from the 4x4 evaluation matrix: source reliability {A,B,C,X} and
/// information validity {1,2,3,4}.
struct EvaluationCode {
  char source_reliability = 'X';
  int info_validity = 4;

  /// Parses codes such as "B2". Throws InvalidEvaluationCode.
  static EvaluationCode parse(std::string_view text);
  static bool valid(char source, int validity) noexcept;
  std::string str() const;

  friend bool operator==(const EvaluationCode&, const EvaluationCode&) = default;
};

// ---------------------------------------------------------------------------
// Attributed elements
// ---------------------------------------------------------------------------

struct Date {
  std::string iso;  // YYYY-MM-DD
  friend bool operator==(const Date&, const Date&) = default;
};

using Value = std::variant<std::string, double, Date>;

struct AttributeValue {
  Value value;
  Credibility credibility = Credibility::Evidence;
  std::optional<UserId> author;

  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
};

using AttributeMap = std::map<std::string, AttributeValue>;

struct EntityObject {
  ObjectId id;
  std::string kind;  // person, vehicle, account, phone, realEstate, placeholder, other
  AttributeMap attributes;
  Credibility credibility = Credibility::Evidence;
  std::optional<EvaluationCode> evaluation;  // Evidence only
  std::optional<UserId> author;              // Knowledge / Assumption only
  std::optional<DatasetId> source_dataset;   // Evidence only
  bool is_placeholder = false;

  /// Entered by an analyst rather than loaded from the central database;
  /// rendered with a dashed outline.
  bool user_defined() const noexcept { return credibility != Credibility::Evidence; }

  friend bool operator==(const EntityObject&, const EntityObject&) = default;
};

struct Relationship {
  RelationshipId id;
  ObjectId source;
  ObjectId target;
  std::string kind;
  bool directed = true;
  AttributeMap attributes;
  Credibility credibility = Credibility::Evidence;
  std::optional<EvaluationCode> evaluation;
  std::optional<UserId> author;
  std::optional<DatasetId> source_dataset;

  bool user_defined() const noexcept { return credibility != Credibility::Evidence; }

  friend bool operator==(const Relationship&, const Relationship&) = default;
};

/// Effective credibility shown for an attribute: never more trusted than its owner.
constexpr Credibility effective_credibility(const AttributeValue& attr, Credibility owner) noexcept {
  return least_trusted(attr.credibility, owner);
}

// ---------------------------------------------------------------------------
// Visual state
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct NodeVisual {
  ObjectId object_id;
  Vec2 position;
  bool minimized = false;
  bool focus = false;
  std::optional<GroupId> group;

  friend bool operator==(const NodeVisual&, const NodeVisual&) = default;
};

struct Group {
  GroupId id;
  std::string name;
  std::optional<std::string> tag_color;
  std::set<ObjectId> members;
  bool collapsed = false;

  /// Count shown on the collapsed group glyph.
  std::size_t badge_count() const noexcept { return members.size(); }

  friend bool operator==(const Group&, const Group&) = default;
};

/// Content of an analysis state: membership, groups, visual flags and layout.
struct Payload {
  std::map<ObjectId, EntityObject> objects;
  std::map<RelationshipId, Relationship> relationships;
  std::map<GroupId, Group> groups;
  std::map<ObjectId, NodeVisual> visuals;

  friend bool operator==(const Payload&, const Payload&) = default;
};

using PositionMap = std::map<ObjectId, Vec2>;

PositionMap positions_of(const Payload& payload);

/// Throws InvariantViolation naming the first broken rule: element
/// credibility/provenance consistency, endpoint closure, one visual per
/// object, disjoint non-empty groups, focus/minimized exclusivity.
void validate_payload(const Payload& payload);

/// Credibility/provenance rules shared by objects and relationships.
void validate_element_provenance(std::string_view what, const std::string& id, Credibility credibility,
                                 const std::optional<UserId>& author,
                                 const std::optional<DatasetId>& source_dataset,
                                 const std::optional<EvaluationCode>& evaluation);

/// Drops relationships whose endpoints are absent. Returns the dropped ids.
std::vector<RelationshipId> drop_dangling_relationships(Payload& payload);

/// Logical per-document clock value. Ordering uses seq only; wall_ms is
/// informational so that clock skew cannot reorder a timeline.
struct Timestamp {
  std::uint64_t seq = 0;
  std::int64_t wall_ms = 0;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) { return a.seq <=> b.seq; }
};

}  // namespace casegraph
