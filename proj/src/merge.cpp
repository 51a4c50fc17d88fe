#include <algorithm>

#include "casegraph/diff.hpp"
#include "casegraph/error.hpp"

namespace casegraph {

MergeSelection MergeSelection::everything(const DiffResult& diff, Side prefer) {
  MergeSelection s;
  s.include_equal = true;
  s.chosen_only_a = diff.only_a;
  s.chosen_only_b = diff.only_b;
  for (const auto& ref : diff.conflicting) s.conflict_resolutions[ref] = prefer;
  for (const auto& name : diff.groups.equal) s.chosen_groups.emplace(prefer, name);
  for (const auto& name : diff.groups.conflicting) s.chosen_groups.emplace(prefer, name);
  for (const auto& name : diff.groups.only_a) s.chosen_groups.emplace(Side::A, name);
  for (const auto& name : diff.groups.only_b) s.chosen_groups.emplace(Side::B, name);
  s.layout_source = prefer;
  return s;
}

namespace {

std::string describe(const ElementRef& ref) {
  return (ref.kind == ElementRef::Kind::Object ? "object " : "relationship ") + ref.id;
}

void check_selection(const DiffResult& diff, const MergeSelection& s, const Payload& a, const Payload& b) {
  for (const auto& ref : s.chosen_only_a) {
    if (!diff.only_a.contains(ref)) fail(ErrorCode::InvalidSelection, describe(ref) + " is not only in A");
  }
  for (const auto& ref : s.chosen_only_b) {
    if (!diff.only_b.contains(ref)) fail(ErrorCode::InvalidSelection, describe(ref) + " is not only in B");
  }
  for (const auto& [ref, _] : s.conflict_resolutions) {
    if (!diff.conflicting.contains(ref)) fail(ErrorCode::InvalidSelection, describe(ref) + " is not in conflict");
  }
  for (const auto& ref : diff.conflicting) {
    if (!s.conflict_resolutions.contains(ref)) fail(ErrorCode::UnresolvedConflict, describe(ref) + " has no resolution");
  }
  for (const auto& [side, name] : s.chosen_groups) {
    const Payload& p = side == Side::A ? a : b;
    const bool found = std::any_of(p.groups.begin(), p.groups.end(), [&](const auto& g) { return g.second.name == name; });
    if (!found) fail(ErrorCode::InvalidSelection, std::string("no group named '") + name + "' on side " + (side == Side::A ? "A" : "B"));
  }
}

template <class Map>
void take(Map& out, const Map& a, const Map& b, ElementRef::Kind kind, const DiffResult& diff,
          const MergeSelection& s) {
  using Key = typename Map::key_type;
  auto pick = [&](const Map& from, const std::string& id) { out.insert_or_assign(Key(id), from.at(Key(id))); };
  for (const auto& ref : diff.equal) {
    if (ref.kind == kind && s.include_equal) pick(a, ref.id);
  }
  for (const auto& ref : s.chosen_only_a) {
    if (ref.kind == kind) pick(a, ref.id);
  }
  for (const auto& ref : s.chosen_only_b) {
    if (ref.kind == kind) pick(b, ref.id);
  }
  for (const auto& [ref, side] : s.conflict_resolutions) {
    if (ref.kind == kind) pick(side == Side::A ? a : b, ref.id);
  }
}

}  // namespace

Payload build_merge_payload(const VisibleGraph& ga, const VisibleGraph& gb, const DiffResult& diff,
                            const MergeSelection& selection, IdSource& ids, const LayoutParams& layout,
                            MergeResult& report) {
  const Payload& a = ga.payload;
  const Payload& b = gb.payload;
  check_selection(diff, selection, a, b);

  Payload out;
  take(out.objects, a.objects, b.objects, ElementRef::Kind::Object, diff, selection);
  take(out.relationships, a.relationships, b.relationships, ElementRef::Kind::Relationship, diff, selection);

  for (auto it = out.relationships.begin(); it != out.relationships.end();) {
    const Relationship& r = it->second;
    if (!out.objects.contains(r.source) || !out.objects.contains(r.target)) {
      report.dropped_relationships.push_back(r.id);
      it = out.relationships.erase(it);
    } else {
      ++it;
    }
  }

  // Groups: every group of a chosen (side, name) is kept. Members of the
  // same-name groups on the other side that the chosen side lacks (or all of
  // them, when both sides chose the name) join the first such group.
  std::map<ObjectId, GroupId> assigned;
  for (const auto& [side, name] : selection.chosen_groups) {
    const bool both = selection.chosen_groups.contains({Side::A, name}) && selection.chosen_groups.contains({Side::B, name});
    if (both && side == Side::B) continue;
    const Payload& own = side == Side::A ? a : b;
    const Payload& other = side == Side::A ? b : a;
    std::vector<Group> parts;
    std::set<ObjectId> owned;
    for (const auto& [_, g] : own.groups) {
      if (g.name != name) continue;
      parts.push_back(g);
      owned.insert(g.members.begin(), g.members.end());
    }
    for (const auto& [_, g] : other.groups) {
      if (g.name != name) continue;
      for (const auto& m : g.members) {
        if ((both || !own.objects.contains(m)) && !owned.contains(m)) parts.front().members.insert(m);
      }
    }

    for (Group& group : parts) {
      if (out.groups.contains(group.id)) group.id = ids.next_group();
      std::set<ObjectId> kept;
      for (const auto& m : group.members) {
        if (!out.objects.contains(m)) continue;
        if (assigned.contains(m)) {
          report.regrouped_nodes.push_back(m);
          continue;
        }
        kept.insert(m);
      }
      group.members = std::move(kept);
      if (group.members.empty()) {
        report.dropped_groups.push_back(name);
        continue;
      }
      for (const auto& m : group.members) assigned.emplace(m, group.id);
      out.groups.emplace(group.id, std::move(group));
    }
  }

  const Payload& source = selection.layout_source == Side::A ? a : b;
  const Payload& fallback = selection.layout_source == Side::A ? b : a;
  PositionMap existing;
  std::vector<ObjectId> fresh;
  for (const auto& [id, _] : out.objects) {
    NodeVisual v{id, {}, false, false, std::nullopt};
    if (auto it = source.visuals.find(id); it != source.visuals.end()) {
      v = it->second;
      existing.emplace(id, v.position);
    } else {
      if (auto jt = fallback.visuals.find(id); jt != fallback.visuals.end()) v = jt->second;
      fresh.push_back(id);
    }
    v.object_id = id;
    v.group.reset();
    if (auto g = assigned.find(id); g != assigned.end()) v.group = g->second;
    out.visuals.emplace(id, v);
  }
  if (!fresh.empty()) {
    const PositionMap placed = incremental_place(layout_graph_of(out), existing, fresh, layout);
    for (const auto& [id, p] : placed) out.visuals.at(id).position = p;
  }
  return out;
}

MergeResult merge(Document& doc, const BranchId& target, const StateId& a, const StateId& b,
                  const MergeSelection& selection, const UserId& author, const std::string& message) {
  if (doc.branch(target).owner != author) {
    fail(ErrorCode::NotBranchOwner, author.str() + " does not own branch " + target.str());
  }
  const VisibleGraph va = doc.resolve_view(a, author);
  const VisibleGraph vb = doc.resolve_view(b, author);
  DiffResult d = diff_payloads(va.payload, vb.payload);
  d.state_a = a;
  d.state_b = b;
  MergeResult result;
  Payload payload = build_merge_payload(va, vb, d, selection, *doc.ids(), doc.meta().layout, result);
  result.state = doc.commit_merge(target, a, b, std::move(payload), message, author);
  return result;
}

}  // namespace casegraph
