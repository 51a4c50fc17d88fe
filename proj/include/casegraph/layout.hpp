#pragma once

// Deterministic force-based layout. Positions are a pure function of the
// graph topology and LayoutParams; no global RNG state is involved.

#include <cstdint>
#include <utility>
#include <vector>

#include "casegraph/model.hpp"

namespace casegraph {

struct LayoutParams {
  std::uint64_t seed = 1;
  int iterations = 300;
  double repulsion_strength = 1.0;
  double link_distance = 30.0;
  /// Weak pull towards the origin, dimensionless.
  double centering_strength = 0.05;
  /// Per-iteration temperature multiplier.
  double timestep_decay = 0.98;
  /// Lower bound on pairwise node distance after a full layout.
  double min_separation = 10.0;

  /// Throws InvariantViolation on out-of-range values.
  void validate() const;
  double jitter_radius() const noexcept { return link_distance / 4.0; }

  friend bool operator==(const LayoutParams&, const LayoutParams&) = default;
};

struct LayoutGraph {
  std::vector<ObjectId> nodes;  // sorted, unique
  std::vector<std::pair<ObjectId, ObjectId>> links;
};

/// All objects and relationships of a payload.
LayoutGraph layout_graph_of(const Payload& payload);

/// Throws EmptyGraph for a graph without nodes.
PositionMap initial_layout(const LayoutGraph& graph, const LayoutParams& params);

/// Positions for `new_nodes` only: centroid of already-positioned neighbours
/// plus seeded jitter within jitter_radius(), or the centroid of `existing`
/// (origin when nothing is placed yet) for nodes without such neighbours.
/// Throws AlreadyPlaced if a new node already has a position.
PositionMap incremental_place(const LayoutGraph& graph, const PositionMap& existing,
                              const std::vector<ObjectId>& new_nodes, const LayoutParams& params);

/// Marker that a relayout was explicitly asked for by an analyst. Layout is
/// otherwise frozen.
struct RelayoutRequest {
  bool user_requested = false;
};

PositionMap relayout(const LayoutGraph& visible_graph, const LayoutParams& params, RelayoutRequest request);

}  // namespace casegraph
