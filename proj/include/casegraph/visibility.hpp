#pragma once

#include <functional>

#include "casegraph/model.hpp"

namespace casegraph {

/// A state's content as seen by one viewer.
struct VisibleGraph {
  StateId state;
  UserId viewer;
  Payload payload;
};

/// Whether the state that first introduced an element lies in the lineage
/// (ancestry including self) of the state being viewed.
struct LineageOracle {
  std::function<bool(const ObjectId&)> object_in_lineage;
  std::function<bool(const RelationshipId&)> relationship_in_lineage;

  static LineageOracle always();
};

/// Evidence and knowledge always pass. Assumptions pass iff the viewer is
/// their author and they were introduced in the lineage. Relationships
/// incident to a hidden object are hidden, assumption attributes of other
/// users are stripped, and groups are restricted to visible members (empty
/// groups disappear). The result is endpoint-closed.
Payload filter_visible(const Payload& payload, const UserId& viewer, const LineageOracle& lineage);

bool visible_to(Credibility credibility, const std::optional<UserId>& author, const UserId& viewer);

struct RenderHints {
  int dots = 3;
  bool dashed = false;
};

RenderHints render_hints(const EntityObject& object);
RenderHints render_hints(const Relationship& rel);

}  // namespace casegraph
