#include "casegraph/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "casegraph/error.hpp"

namespace casegraph {

void LayoutParams::validate() const {
  if (iterations < 1) fail(ErrorCode::InvariantViolation, "layout iterations must be >= 1");
  if (!(link_distance > 0.0) || !std::isfinite(link_distance)) {
    fail(ErrorCode::InvariantViolation, "layout linkDistance must be > 0");
  }
  if (!(timestep_decay > 0.0 && timestep_decay < 1.0)) {
    fail(ErrorCode::InvariantViolation, "layout timestepDecay must lie in (0,1)");
  }
  if (!(repulsion_strength >= 0.0) || !(centering_strength >= 0.0) || !(min_separation >= 0.0)) {
    fail(ErrorCode::InvariantViolation, "layout strengths must be non-negative");
  }
}

LayoutGraph layout_graph_of(const Payload& payload) {
  LayoutGraph graph;
  graph.nodes.reserve(payload.objects.size());
  for (const auto& [id, _] : payload.objects) graph.nodes.push_back(id);
  for (const auto& [_, rel] : payload.relationships) graph.links.emplace_back(rel.source, rel.target);
  return graph;
}

namespace {

// mt19937_64 output is fully specified by the standard; the distributions
// are not, so uniform doubles are derived by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vec2 random_in_disc(Rng& rng, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(theta), r * std::sin(theta)};
}

// Barnes-Hut quadtree over the current positions, rebuilt every iteration.
class QuadTree {
 public:
  static constexpr double kTheta = 0.9;

  explicit QuadTree(const std::vector<Vec2>& points) : points_(points) {
    double minx = points[0].x, maxx = points[0].x, miny = points[0].y, maxy = points[0].y;
    for (const auto& p : points) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    const double size = std::max({maxx - minx, maxy - miny, 1e-9}) * 1.0001;
    cells_.reserve(points.size() * 2);
    cells_.emplace_back(minx, miny, size);
    for (int i = 0; i < static_cast<int>(points.size()); ++i) insert(0, i, 0);
  }

  /// Accumulates repulsion on point i into `out`.
  void repulse(int i, double strength, Vec2& out) const {
    const Vec2 p = points_[i];
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Cell& cell = cells_[stack.back()];
      stack.pop_back();
      if (cell.mass == 0) continue;
      if (cell.leaf()) {
        for (int j : cell.points) {
          if (j != i) add_force(p, points_[j], 1.0, strength, i, j, out);
        }
        continue;
      }
      const double cx = cell.sum_x / cell.mass, cy = cell.sum_y / cell.mass;
      const double dx = p.x - cx, dy = p.y - cy;
      const double dist = std::sqrt(dx * dx + dy * dy);
      const bool inside = p.x >= cell.x0 && p.x < cell.x0 + cell.size && p.y >= cell.y0 && p.y < cell.y0 + cell.size;
      if (!inside && cell.size < kTheta * dist) {
        add_force(p, Vec2{cx, cy}, cell.mass, strength, i, -1, out);
        continue;
      }
      for (int c : cell.child) {
        if (c >= 0) stack.push_back(c);
      }
    }
  }

  static void add_force(Vec2 p, Vec2 q, double mass, double strength, int i, int j, Vec2& out) {
    double dx = p.x - q.x, dy = p.y - q.y;
    double d2 = dx * dx + dy * dy;
    if (d2 < 1e-18) {
      // Coincident points: separate along an index-derived direction.
      const double angle = static_cast<double>((i * 7919 + (j + 1) * 104729) % 3600) * std::numbers::pi / 1800.0;
      dx = 1e-6 * std::cos(angle);
      dy = 1e-6 * std::sin(angle);
      d2 = 1e-12;
    }
    const double scale = strength * mass / d2;
    out.x += dx * scale;
    out.y += dy * scale;
  }

 private:
  struct Cell {
    double x0, y0, size;
    Cell(double x, double y, double s) : x0(x), y0(y), size(s) {}
    double sum_x = 0, sum_y = 0, mass = 0;
    int child[4] = {-1, -1, -1, -1};
    std::vector<int> points;
    bool split = false;
    bool leaf() const noexcept { return !split; }
  };

  static constexpr int kMaxDepth = 48;

  void insert(int cell_index, int point, int depth) {
    for (;;) {
      Cell& cell = cells_[cell_index];
      const Vec2 p = points_[point];
      cell.sum_x += p.x;
      cell.sum_y += p.y;
      cell.mass += 1.0;
      if (cell.leaf()) {
        if (cell.points.empty() || depth >= kMaxDepth) {
          cell.points.push_back(point);
          return;
        }
        // Split: push the resident point down, then continue with `point`.
        cell.split = true;
        std::vector<int> residents;
        residents.swap(cell.points);
        for (int r : residents) place_in_child(cell_index, r, depth);
        continue_into_child(cell_index, point, depth);
        return;
      }
      const int c = child_for(cell_index, p);
      cell_index = c;
      ++depth;
    }
  }

  int child_for(int cell_index, Vec2 p) {
    const double half = cells_[cell_index].size / 2.0;
    const double x0 = cells_[cell_index].x0, y0 = cells_[cell_index].y0;
    const int qx = p.x >= x0 + half ? 1 : 0;
    const int qy = p.y >= y0 + half ? 1 : 0;
    const int q = qy * 2 + qx;
    if (cells_[cell_index].child[q] < 0) {
      cells_.emplace_back(x0 + qx * half, y0 + qy * half, half);
      cells_[cell_index].child[q] = static_cast<int>(cells_.size()) - 1;
    }
    return cells_[cell_index].child[q];
  }

  void place_in_child(int cell_index, int point, int depth) {
    const int c = child_for(cell_index, points_[point]);
    insert(c, point, depth + 1);
  }

  void continue_into_child(int cell_index, int point, int depth) { place_in_child(cell_index, point, depth); }

  const std::vector<Vec2>& points_;
  std::vector<Cell> cells_;
};

constexpr std::size_t kExactRepulsionLimit = 256;

void enforce_min_separation(std::vector<Vec2>& pos, double min_sep) {
  if (min_sep <= 0.0 || pos.size() < 2) return;
  const double target = min_sep * 1.001;
  auto key = [&](double x, double y) {
    const auto cx = static_cast<std::int64_t>(std::floor(x / min_sep));
    const auto cy = static_cast<std::int64_t>(std::floor(y / min_sep));
    return std::pair{cx, cy};
  };
  auto pack = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(cy);
  };
  for (int sweep = 0; sweep < 500; ++sweep) {
    std::unordered_map<std::uint64_t, std::vector<int>> grid;
    grid.reserve(pos.size() * 2);
    for (int i = 0; i < static_cast<int>(pos.size()); ++i) {
      auto [cx, cy] = key(pos[i].x, pos[i].y);
      grid[pack(cx, cy)].push_back(i);
    }
    bool moved = false;
    for (int i = 0; i < static_cast<int>(pos.size()); ++i) {
      auto [cx, cy] = key(pos[i].x, pos[i].y);
      for (std::int64_t ox = -1; ox <= 1; ++ox) {
        for (std::int64_t oy = -1; oy <= 1; ++oy) {
          auto it = grid.find(pack(cx + ox, cy + oy));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j <= i) continue;
            double dx = pos[j].x - pos[i].x, dy = pos[j].y - pos[i].y;
            double d = std::sqrt(dx * dx + dy * dy);
            if (d >= min_sep) continue;
            if (d < 1e-12) {
              const double angle = static_cast<double>((i * 7919 + j * 104729) % 3600) * std::numbers::pi / 1800.0;
              dx = std::cos(angle);
              dy = std::sin(angle);
              d = 1.0;
              const double push = target / 2.0;
              pos[i].x -= dx * push;
              pos[i].y -= dy * push;
              pos[j].x += dx * push;
              pos[j].y += dy * push;
            } else {
              const double push = (target - d) / 2.0 / d;
              pos[i].x -= dx * push;
              pos[i].y -= dy * push;
              pos[j].x += dx * push;
              pos[j].y += dy * push;
            }
            moved = true;
          }
        }
      }
    }
    if (!moved) return;
  }
}

}  // namespace

PositionMap initial_layout(const LayoutGraph& graph, const LayoutParams& params) {
  params.validate();
  if (graph.nodes.empty()) fail(ErrorCode::EmptyGraph, "layout requested for a graph without nodes");

  std::vector<ObjectId> nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const std::size_t n = nodes.size();
  std::unordered_map<ObjectId, int> index;
  index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) index.emplace(nodes[i], static_cast<int>(i));

  std::vector<std::pair<int, int>> links;
  links.reserve(graph.links.size());
  for (const auto& [a, b] : graph.links) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end() || ia->second == ib->second) continue;
    links.emplace_back(ia->second, ib->second);
  }

  const double L = params.link_distance;
  Rng rng(params.seed);
  const double disc = L * std::sqrt(static_cast<double>(n)) * 0.5;
  std::vector<Vec2> pos(n);
  for (auto& p : pos) p = random_in_disc(rng, disc);

  const double repulsion = params.repulsion_strength * L * L;
  double temperature = std::max(L, disc / 2.0);
  std::vector<Vec2> disp(n);

  if (n > 1) {
    for (int iter = 0; iter < params.iterations; ++iter) {
      std::fill(disp.begin(), disp.end(), Vec2{});
      if (n <= kExactRepulsionLimit) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) {
            Vec2 f{};
            QuadTree::add_force(pos[i], pos[j], 1.0, repulsion, static_cast<int>(i), static_cast<int>(j), f);
            disp[i].x += f.x;
            disp[i].y += f.y;
            disp[j].x -= f.x;
            disp[j].y -= f.y;
          }
        }
      } else {
        QuadTree tree(pos);
        for (std::size_t i = 0; i < n; ++i) tree.repulse(static_cast<int>(i), repulsion, disp[i]);
      }
      for (const auto& [a, b] : links) {
        const double dx = pos[b].x - pos[a].x, dy = pos[b].y - pos[a].y;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < 1e-12) continue;
        const double f = d / L;  // |F| = d^2 / L, direction dx/d
        disp[a].x += dx * f;
        disp[a].y += dy * f;
        disp[b].x -= dx * f;
        disp[b].y -= dy * f;
      }
      for (std::size_t i = 0; i < n; ++i) {
        disp[i].x -= params.centering_strength * pos[i].x;
        disp[i].y -= params.centering_strength * pos[i].y;
        const double len = std::sqrt(disp[i].x * disp[i].x + disp[i].y * disp[i].y);
        if (!(len > 0.0) || !std::isfinite(len)) continue;
        const double step = std::min(len, temperature) / len;
        pos[i].x += disp[i].x * step;
        pos[i].y += disp[i].y * step;
      }
      temperature *= params.timestep_decay;
    }
    enforce_min_separation(pos, params.min_separation);
  }

  // Anchor the centroid at the origin.
  double cx = 0, cy = 0;
  for (const auto& p : pos) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  PositionMap out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 p{pos[i].x - cx, pos[i].y - cy};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::InvariantViolation, "layout produced a non-finite coordinate for " + nodes[i].str());
    }
    out.emplace(nodes[i], p);
  }
  return out;
}

PositionMap incremental_place(const LayoutGraph& graph, const PositionMap& existing,
                              const std::vector<ObjectId>& new_nodes, const LayoutParams& params) {
  params.validate();
  for (const auto& id : new_nodes) {
    if (existing.contains(id)) fail(ErrorCode::AlreadyPlaced, "node " + id.str() + " already has a position");
  }
  Vec2 center{};
  if (!existing.empty()) {
    for (const auto& [_, p] : existing) {
      center.x += p.x;
      center.y += p.y;
    }
    center.x /= static_cast<double>(existing.size());
    center.y /= static_cast<double>(existing.size());
  }

  std::unordered_map<ObjectId, std::vector<ObjectId>> neighbours;
  for (const auto& [a, b] : graph.links) {
    if (a == b) continue;
    neighbours[a].push_back(b);
    neighbours[b].push_back(a);
  }

  PositionMap out;
  for (const auto& id : new_nodes) {
    Vec2 anchor = center;
    auto it = neighbours.find(id);
    if (it != neighbours.end()) {
      std::vector<ObjectId> placed;
      for (const auto& nb : it->second) {
        if (existing.contains(nb)) placed.push_back(nb);
      }
      std::sort(placed.begin(), placed.end());
      placed.erase(std::unique(placed.begin(), placed.end()), placed.end());
      if (!placed.empty()) {
        anchor = {};
        for (const auto& nb : placed) {
          anchor.x += existing.at(nb).x;
          anchor.y += existing.at(nb).y;
        }
        anchor.x /= static_cast<double>(placed.size());
        anchor.y /= static_cast<double>(placed.size());
      }
    }
    Rng rng(params.seed ^ fnv1a(id.str()));
    const Vec2 j = random_in_disc(rng, params.jitter_radius());
    out.emplace(id, Vec2{anchor.x + j.x, anchor.y + j.y});
  }
  return out;
}

PositionMap relayout(const LayoutGraph& visible_graph, const LayoutParams& params, RelayoutRequest request) {
  if (!request.user_requested) {
    fail(ErrorCode::RelayoutNotRequested, "layout is frozen; relayout needs an explicit user request");
  }
  return initial_layout(visible_graph, params);
}

}  // namespace casegraph
