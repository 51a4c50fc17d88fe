#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

namespace casegraph {

/// Opaque string identifier tagged by the entity it names, so an object id
/// cannot be passed where a state id is expected.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

using ObjectId = Id<struct ObjectTag>;
using RelationshipId = Id<struct RelationshipTag>;
using GroupId = Id<struct GroupTag>;
using UserId = Id<struct UserTag>;
using StateId = Id<struct StateTag>;
using BranchId = Id<struct BranchTag>;
using CommentId = Id<struct CommentTag>;
using DocumentId = Id<struct DocumentTag>;
using DatasetId = Id<struct DatasetTag>;
using CaseId = Id<struct CaseTag>;
using UpdateId = Id<struct UpdateTag>;
using EventId = Id<struct EventTag>;
using ReportId = Id<struct ReportTag>;
using DraftId = Id<struct DraftTag>;

}  // namespace casegraph

template <class Tag>
struct std::hash<casegraph::Id<Tag>> {
  std::size_t operator()(const casegraph::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
