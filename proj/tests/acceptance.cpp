// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "casegraph/case.hpp"
#include "casegraph/diff.hpp"
#include "casegraph/layout.hpp"
#include "casegraph/report.hpp"
#include "casegraph/service.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace casegraph;
namespace fs = std::filesystem;
using fixtures::evidence_payload;
using fixtures::make_document;
using fixtures::TempDir;

namespace {

using Rng = std::mt19937;

struct Result {
  bool ok = true;
  long checks = 0;
  std::string first_failure;
  std::string note;

  void expect(bool cond, const std::string& what) {
    ++checks;
    if (!cond && ok) {
      ok = false;
      first_failure = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

const std::vector<UserId> kUsers{UserId("alice"), UserId("bob"), UserId("carol")};

/// Non-layout edits on a draft, restricted to what `who` can see.
void random_edits(const Document& doc, StateDraft& d, const UserId& who, Rng& rng, int max_ops = 3) {
  std::vector<ObjectId> pool;
  for (const auto& [id, _] : doc.resolve_view(d.base(), who).payload.objects) pool.push_back(id);
  const int ops = static_cast<int>(pick(rng, max_ops + 1));
  for (int i = 0; i < ops; ++i) {
    switch (pick(rng, 5)) {
      case 0: {
        const auto c = coin(rng) ? Credibility::Assumption : Credibility::Knowledge;
        pool.push_back(d.create_object(coin(rng) ? "person" : "placeholder", {}, c, who));
        break;
      }
      case 1: {
        if (pool.size() < 2) break;
        const ObjectId a = pool[pick(rng, pool.size())], b = pool[pick(rng, pool.size())];
        if (a == b) break;
        d.create_relationship(a, b, "linked", coin(rng), {}, coin(rng) ? Credibility::Assumption : Credibility::Knowledge,
                              who);
        break;
      }
      case 2: {
        if (pool.empty()) break;
        const std::size_t k = pick(rng, pool.size());
        if (d.payload().objects.at(pool[k]).credibility != Credibility::Evidence) break;
        d.exclude_evidence(pool[k], who);
        pool.erase(pool.begin() + static_cast<long>(k));
        break;
      }
      case 3: {
        if (pool.empty()) break;
        const ObjectId o = pool[pick(rng, pool.size())];
        d.set_node_visual(o, coin(rng) ? VisualChange::minimize() : VisualChange::restore(), who);
        break;
      }
      default: {
        std::vector<ObjectId> free;
        for (const auto& o : pool) {
          if (!d.payload().visuals.at(o).group) free.push_back(o);
        }
        if (free.empty()) break;
        std::vector<ObjectId> members{free[pick(rng, free.size())]};
        const ObjectId extra = free[pick(rng, free.size())];
        if (extra != members[0]) members.push_back(extra);
        d.group_nodes(members, "g" + std::to_string(pick(rng, 3)), std::nullopt, who);
      }
    }
  }
}

BranchId random_branch_of(const Document& doc, const UserId& who, Rng& rng) {
  std::vector<BranchId> mine;
  for (const auto& [id, b] : doc.branches()) {
    if (b.owner == who) mine.push_back(id);
  }
  return mine[pick(rng, mine.size())];
}

StateId random_state(const Document& doc, Rng& rng) {
  const auto ids = doc.state_ids();
  return ids[pick(rng, ids.size())];
}

/// One random create/branch/commit/merge step.
void random_step(Document& doc, int& branch_counter, Rng& rng, bool allow_merge = true) {
  const UserId who = kUsers[pick(rng, kUsers.size())];
  const auto roll = pick(rng, 10);
  if (roll < 3 || !std::any_of(doc.branches().begin(), doc.branches().end(),
                               [&](const auto& b) { return b.second.owner == who; })) {
    doc.create_branch("b" + std::to_string(branch_counter++), "", random_state(doc, rng), who);
    return;
  }
  const BranchId target = random_branch_of(doc, who, rng);
  if (roll < 8 || !allow_merge) {
    StateDraft d = doc.open_draft(target, who);
    random_edits(doc, d, who, rng);
    doc.commit_state(target, d, "step", who);
    return;
  }
  const StateId a = random_state(doc, rng), b = random_state(doc, rng);
  merge(doc, target, a, b, MergeSelection::everything(diff(doc, a, b, who), coin(rng) ? Side::A : Side::B), who);
}

// ---------------------------------------------------------------------------

Result dag_laws() {
  Result r;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  for (int seq = 0; seq < 1000; ++seq) {
    Document doc = make_document(evidence_payload(1 + static_cast<int>(pick(rng, 10))));
    int branches = 0;
    const int steps = 5 + static_cast<int>(pick(rng, 10));
    for (int i = 0; i < steps; ++i) random_step(doc, branches, rng);
    const auto parents = oracle::parent_map(doc);
    const oracle::DagReport rep = oracle::check_dag(parents);
    r.expect(rep.acyclic, "cycle in sequence " + std::to_string(seq));
    r.expect(rep.parent_counts_ok, "parent count outside {0,1,2} in sequence " + std::to_string(seq));
    r.expect(rep.parents_exist, "dangling parent in sequence " + std::to_string(seq));
    r.expect(rep.roots == 1, "root count " + std::to_string(rep.roots) + " in sequence " + std::to_string(seq));
    const StateId probe = random_state(doc, rng);
    std::set<std::string> engine;
    for (const auto& s : doc.ancestry(probe)) engine.insert(s.str());
    r.expect(engine == oracle::walk_ancestry(parents, probe.str()), "ancestry mismatch in sequence " + std::to_string(seq));
  }
  const double secs = seconds_since(t0);
  r.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s");
  r.note = "1000 sequences in " + std::to_string(secs).substr(0, 5) + " s";
  return r;
}

/// Random payload over a shared id pool so that pairs overlap, differ and conflict.
Payload random_small_payload(Rng& rng) {
  Payload p;
  const int objects = 1 + static_cast<int>(pick(rng, 5));
  std::vector<ObjectId> ids;
  for (int i = 0; i < 6 && static_cast<int>(ids.size()) < objects; ++i) {
    if (!coin(rng, 0.7)) continue;
    EntityObject o = fixtures::evidence_object("o" + std::to_string(i));
    if (coin(rng, 0.3)) o.attributes["alias"] = AttributeValue{std::string(coin(rng) ? "x" : "y"), Credibility::Knowledge, UserId("alice")};
    if (coin(rng, 0.2)) o.evaluation = EvaluationCode{'C', 3};
    if (coin(rng, 0.2)) {
      o.credibility = Credibility::Knowledge;
      o.evaluation.reset();
      o.source_dataset.reset();
      o.author = UserId("alice");
    }
    p.visuals[o.id] = NodeVisual{o.id, Vec2{static_cast<double>(pick(rng, 3)), 0.0}, coin(rng, 0.2), false, std::nullopt};
    ids.push_back(o.id);
    p.objects.emplace(o.id, std::move(o));
  }
  const int rels = static_cast<int>(pick(rng, 4));
  for (int i = 0; i < rels && ids.size() >= 2; ++i) {
    const std::string a = ids[pick(rng, ids.size())].str(), b = ids[pick(rng, ids.size())].str();
    Relationship rel = fixtures::evidence_relationship("r" + std::to_string(pick(rng, 4)), a, b, coin(rng) ? "knows" : "owns");
    rel.directed = coin(rng, 0.8);
    p.relationships.insert_or_assign(rel.id, rel);
  }
  std::set<ObjectId> used;
  for (int g = 0; g < 2; ++g) {
    if (!coin(rng, 0.4)) continue;
    Group group{GroupId("~g" + std::to_string(g)), "g" + std::to_string(pick(rng, 2)), std::nullopt, {}, coin(rng)};
    if (coin(rng, 0.3)) group.tag_color = "#f00";
    for (const auto& id : ids) {
      if (!used.contains(id) && coin(rng)) group.members.insert(id);
    }
    if (group.members.empty()) continue;
    for (const auto& m : group.members) {
      used.insert(m);
      p.visuals.at(m).group = group.id;
    }
    p.groups.emplace(group.id, std::move(group));
  }
  return p;
}

std::set<std::pair<int, std::string>> as_pairs(const std::set<ElementRef>& refs) {
  std::set<std::pair<int, std::string>> out;
  for (const auto& r : refs) out.insert({r.kind == ElementRef::Kind::Object ? 0 : 1, r.id});
  return out;
}

Result diff_oracle() {
  Result r;
  Rng rng(2002);
  for (int i = 0; i < 500; ++i) {
    const Payload a = random_small_payload(rng), b = random_small_payload(rng);
    const DiffResult d = diff_payloads(a, b);
    const oracle::DiffTable t = oracle::diff_table(a, b);
    const std::string tag = " (pair " + std::to_string(i) + ")";
    r.expect(as_pairs(d.equal) == t.equal, "equal partition" + tag);
    r.expect(as_pairs(d.only_a) == t.only_a, "onlyA partition" + tag);
    r.expect(as_pairs(d.only_b) == t.only_b, "onlyB partition" + tag);
    r.expect(as_pairs(d.conflicting) == t.conflicting, "conflict partition" + tag);
    r.expect(d.groups.equal == t.groups_equal && d.groups.only_a == t.groups_only_a &&
                 d.groups.only_b == t.groups_only_b && d.groups.conflicting == t.groups_conflicting,
             "group partition" + tag);
    const DiffResult self = diff_payloads(a, a);
    r.expect(self.only_a.empty() && self.only_b.empty() && self.conflicting.empty() && self.groups.conflicting.empty(),
             "diff(A,A) not empty" + tag);
    r.expect(self.equal.size() == a.objects.size() + a.relationships.size(), "diff(A,A) equal set" + tag);
  }
  // Same law through documents and viewer resolution.
  for (int i = 0; i < 50; ++i) {
    Document doc = make_document(evidence_payload(4));
    int branches = 0;
    for (int s = 0; s < 6; ++s) random_step(doc, branches, rng, false);
    const StateId a = random_state(doc, rng), b = random_state(doc, rng);
    const UserId who = kUsers[pick(rng, kUsers.size())];
    const DiffResult d = diff(doc, a, b, who);
    const oracle::DiffTable t = oracle::diff_table(doc.resolve_view(a, who).payload, doc.resolve_view(b, who).payload);
    r.expect(as_pairs(d.equal) == t.equal && as_pairs(d.only_a) == t.only_a && as_pairs(d.only_b) == t.only_b &&
                 as_pairs(d.conflicting) == t.conflicting,
             "document diff " + std::to_string(i));
    r.expect(diff(doc, a, a, who).identical(), "document diff(A,A) " + std::to_string(i));
  }
  r.note = "500 payload pairs + 50 document pairs";
  return r;
}

bool endpoint_closed(const Payload& p) {
  for (const auto& [_, rel] : p.relationships) {
    if (!p.objects.contains(rel.source) || !p.objects.contains(rel.target)) return false;
  }
  return true;
}

Result merge_algebra() {
  Result r;
  Rng rng(3003);
  for (int i = 0; i < 100; ++i) {
    Document doc = make_document(evidence_payload(5));
    int branches = 0;
    for (int s = 0; s < 6; ++s) random_step(doc, branches, rng);
    const StateId a = random_state(doc, rng);
    const UserId who = doc.state(a).author;
    const BranchId target = random_branch_of(doc, who, rng);
    const MergeResult m = merge(doc, target, a, a, MergeSelection::everything(diff(doc, a, a, who)), who);
    r.expect(doc.state(m.state).payload == doc.resolve_view(a, who).payload, "merge(A,A) payload differs " + std::to_string(i));
    r.expect(doc.state(m.state).payload_hash == payload_hash(doc.resolve_view(a, who).payload), "merge(A,A) hash " + std::to_string(i));
    r.expect(doc.parents(m.state).size() == 2, "merge(A,A) parents");
  }

  const UserId alice("alice");
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + static_cast<int>(pick(rng, 8));
    Document doc = make_document(evidence_payload(n));
    const BranchId main = doc.find_branch("main").value();
    const BranchId other = doc.create_branch("other", "", doc.root(), alice);
    // Split the evidence: each side excludes what the other keeps.
    std::vector<bool> left(n);
    for (int k = 0; k < n; ++k) left[k] = coin(rng);
    StateDraft da = doc.open_draft(main, alice);
    StateDraft db = doc.open_draft(other, alice);
    for (int k = 0; k < n; ++k) (left[k] ? db : da).exclude_evidence(ObjectId("e" + std::to_string(k)), alice);
    for (int k = 0, extra = static_cast<int>(pick(rng, 3)); k < extra; ++k) {
      da.create_object("person", {}, Credibility::Knowledge, alice);
      db.create_object("vehicle", {}, Credibility::Assumption, alice);
    }
    const StateId a = doc.commit_state(main, da, "a", alice), b = doc.commit_state(other, db, "b", alice);
    const DiffResult d = diff(doc, a, b, alice);
    r.expect(d.equal.empty() && d.conflicting.empty(), "disjoint states share elements " + std::to_string(i));
    const MergeResult m = merge(doc, main, a, b, MergeSelection::everything(d), alice);
    const Payload& mp = doc.state(m.state).payload;
    r.expect(mp.objects.size() == doc.state(a).payload.objects.size() + doc.state(b).payload.objects.size(),
             "|merged| != |A|+|B| in trial " + std::to_string(i));
    r.expect(endpoint_closed(mp), "disjoint merge not endpoint-closed");
    r.expect(doc.parents(m.state).size() == 2, "disjoint merge parents");
  }

  for (int i = 0; i < 300; ++i) {
    Document doc = make_document(evidence_payload(6));
    int branches = 0;
    for (int s = 0; s < 6; ++s) random_step(doc, branches, rng);
    const StateId a = random_state(doc, rng), b = random_state(doc, rng);
    const UserId who = kUsers[pick(rng, kUsers.size())];
    if (std::none_of(doc.branches().begin(), doc.branches().end(), [&](const auto& e) { return e.second.owner == who; })) {
      doc.create_branch("mine", "", doc.root(), who);
    }
    const DiffResult d = diff(doc, a, b, who);
    MergeSelection s;
    s.include_equal = coin(rng, 0.8);
    for (const auto& ref : d.only_a) {
      if (coin(rng)) s.chosen_only_a.insert(ref);
    }
    for (const auto& ref : d.only_b) {
      if (coin(rng)) s.chosen_only_b.insert(ref);
    }
    for (const auto& ref : d.conflicting) s.conflict_resolutions[ref] = coin(rng) ? Side::A : Side::B;
    for (const auto& name : d.groups.only_a) {
      if (coin(rng)) s.chosen_groups.emplace(Side::A, name);
    }
    for (const auto& name : d.groups.only_b) {
      if (coin(rng)) s.chosen_groups.emplace(Side::B, name);
    }
    for (const auto& name : d.groups.conflicting) {
      if (coin(rng)) s.chosen_groups.emplace(coin(rng) ? Side::A : Side::B, name);
    }
    s.layout_source = coin(rng) ? Side::A : Side::B;
    const MergeResult m = merge(doc, random_branch_of(doc, who, rng), a, b, s, who);
    const Payload& mp = doc.state(m.state).payload;
    r.expect(endpoint_closed(mp), "random merge not endpoint-closed " + std::to_string(i));
    r.expect(doc.parents(m.state).size() == 2, "random merge parents " + std::to_string(i));
    r.expect(oracle::check_dag(oracle::parent_map(doc)).ok(), "DAG broken by merge " + std::to_string(i));
  }
  r.note = "100 self merges, 100 disjoint merges, 300 random selections";
  return r;
}

Result visibility() {
  Result r;
  Rng rng(4004);
  long views = 0;
  for (int dag = 0; dag < 200; ++dag) {
    Document doc = make_document(evidence_payload(1 + static_cast<int>(pick(rng, 5))));
    int branches = 0;
    const int steps = 4 + static_cast<int>(pick(rng, 8));
    for (int i = 0; i < steps; ++i) random_step(doc, branches, rng);
    // Seed a shared object that is later demoted back to an assumption.
    if (coin(rng, 0.3)) {
      const UserId who = kUsers[pick(rng, kUsers.size())];
      if (std::none_of(doc.branches().begin(), doc.branches().end(), [&](const auto& e) { return e.second.owner == who; })) {
        doc.create_branch("own", "", doc.root(), who);
      }
      const BranchId b = random_branch_of(doc, who, rng);
      StateDraft d = doc.open_draft(b, who);
      const ObjectId k = d.create_object("person", {}, Credibility::Knowledge, who);
      doc.commit_state(b, d, "k", who);
      for (int i = 0; i < 3; ++i) random_step(doc, branches, rng);
      doc.demote_credibility(k, who);
      for (int i = 0; i < 3; ++i) random_step(doc, branches, rng);
    }
    for (const auto& s : doc.state_ids()) {
      for (const auto& u : kUsers) {
        const Payload view = doc.resolve_view(s, u).payload;
        oracle::VisibleIds got;
        for (const auto& [id, _] : view.objects) got.objects.insert(id.str());
        for (const auto& [id, _] : view.relationships) got.relationships.insert(id.str());
        r.expect(got == oracle::visible_ids(doc, s, u), "view mismatch in DAG " + std::to_string(dag) + " state " + s.str());
        ++views;
      }
    }
  }
  r.note = "200 DAGs, " + std::to_string(views) + " views";
  return r;
}

LayoutGraph random_graph(int n, Rng& rng) {
  LayoutGraph g;
  for (int i = 0; i < n; ++i) g.nodes.emplace_back("n" + std::to_string(i));
  std::sort(g.nodes.begin(), g.nodes.end());
  for (int i = 1; i < n; ++i) g.links.emplace_back(g.nodes[i], g.nodes[pick(rng, static_cast<std::size_t>(i))]);
  for (int i = 0; i < n / 4; ++i) g.links.emplace_back(g.nodes[pick(rng, n)], g.nodes[pick(rng, n)]);
  return g;
}

bool bit_identical(const PositionMap& a, const PositionMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [id, p] : a) {
    auto it = b.find(id);
    if (it == b.end() || std::memcmp(&p, &it->second, sizeof(Vec2)) != 0) return false;
  }
  return true;
}

Result layout_contracts() {
  Result r;
  Rng rng(5005);
  for (int g = 0; g < 5; ++g) {
    const LayoutGraph graph = random_graph(10 + 20 * g, rng);
    LayoutParams p;
    p.seed = 100 + g;
    const PositionMap first = initial_layout(graph, p);
    for (int run = 1; run < 10; ++run) {
      r.expect(bit_identical(first, initial_layout(graph, p)), "graph " + std::to_string(g) + " run " + std::to_string(run));
    }
  }

  for (int trial = 0; trial < 100; ++trial) {
    Document doc = make_document(evidence_payload(2 + static_cast<int>(pick(rng, 8))));
    int branches = 0;
    for (int step = 0; step < 10; ++step) {
      const UserId who = kUsers[pick(rng, kUsers.size())];
      if (coin(rng, 0.3) || std::none_of(doc.branches().begin(), doc.branches().end(),
                                         [&](const auto& e) { return e.second.owner == who; })) {
        doc.create_branch("b" + std::to_string(branches++), "", random_state(doc, rng), who);
        continue;
      }
      const BranchId b = random_branch_of(doc, who, rng);
      const StateId base = doc.tip(b);
      StateDraft d = doc.open_draft(b, who);
      random_edits(doc, d, who, rng, 4);
      const StateId next = doc.commit_state(b, d, "edit", who);
      const PositionMap before = positions_of(doc.state(base).payload);
      const PositionMap after = positions_of(doc.state(next).payload);
      for (const auto& [id, pos] : after) {
        auto it = before.find(id);
        if (it != before.end()) {
          r.expect(std::memcmp(&it->second, &pos, sizeof(Vec2)) == 0, "node " + id.str() + " moved in trial " + std::to_string(trial));
        }
        r.expect(std::isfinite(pos.x) && std::isfinite(pos.y), "non-finite placement");
      }
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  const PositionMap big = initial_layout(random_graph(10000, rng), LayoutParams{});
  const double big_secs = seconds_since(t0);
  bool finite = big.size() == 10000;
  for (const auto& [_, v] : big) finite = finite && std::isfinite(v.x) && std::isfinite(v.y);
  r.expect(finite, "non-finite coordinate at 10k nodes");
  for (int n : {1000, 3000}) {
    for (const auto& [_, v] : initial_layout(random_graph(n, rng), LayoutParams{})) {
      r.expect(std::isfinite(v.x) && std::isfinite(v.y), "non-finite coordinate at " + std::to_string(n) + " nodes");
    }
  }

  t0 = std::chrono::steady_clock::now();
  initial_layout(random_graph(50, rng), LayoutParams{});
  const double small_secs = seconds_since(t0);
  r.expect(small_secs < 2.0, "50-node layout took " + std::to_string(small_secs) + " s");
  std::ostringstream note;
  note.precision(3);
  note << "50 nodes " << small_secs << " s, 10k nodes " << big_secs << " s";
  r.note = note.str();
  return r;
}

/// Ids a delta touches, derived from the delta file and the dataset before it.
std::pair<std::set<std::string>, std::set<std::string>> touched_by(const json& delta, const Dataset& before) {
  std::set<std::string> objects, rels;
  for (const auto& o : delta.value("modifiedObjects", json::array())) objects.insert(o["id"].get<std::string>());
  for (const auto& o : delta.value("addedObjects", json::array())) objects.insert(o["id"].get<std::string>());
  for (const auto& id : delta.value("removedObjectIds", json::array())) {
    objects.insert(id.get<std::string>());
    for (const auto& [rid, rel] : before.relationships) {
      if (rel.source.str() == id || rel.target.str() == id) rels.insert(rid.str());
    }
  }
  for (const auto& id : delta.value("removedRelationshipIds", json::array())) rels.insert(id.get<std::string>());
  for (const auto& rel : delta.value("addedRelationships", json::array())) {
    rels.insert(rel["id"].get<std::string>());
    objects.insert(rel["source"].get<std::string>());
    objects.insert(rel["target"].get<std::string>());
  }
  return {objects, rels};
}

std::map<std::string, std::string> stored_hashes(Case& ws) {
  std::map<std::string, std::string> out;
  for (const auto& doc : ws.document_ids()) {
    ws.read(doc, [&](const Document& d) {
      for (const auto& s : d.state_ids()) out[doc.str() + "/" + s.str()] = d.state(s).payload_hash;
    });
  }
  return out;
}

Result staleness() {
  Result r;
  TempDir dir("accept-stale");
  Case ws(dir.path, CaseId("c"), fixtures::counter_clock());
  ws.load_dataset(fixtures::dataset_file("ds1", 20, "p"));
  ws.load_dataset(fixtures::dataset_file("ds2", 6, "z"));
  Rng rng(6006);
  std::vector<DocumentId> docs{ws.create_document("one", {DatasetId("ds1")}, UserId("alice")),
                               ws.create_document("two", {DatasetId("ds1"), DatasetId("ds2")}, UserId("bob")),
                               ws.create_document("three", {DatasetId("ds2")}, UserId("carol"))};
  for (const auto& id : docs) {
    ws.write(id, [&](Document& d) {
      int branches = 0;
      for (int i = 0; i < 12; ++i) random_step(d, branches, rng);
    });
  }

  const std::vector<json> deltas = {
      {{"id", "u1"}, {"datasetId", "ds1"}, {"baseVersion", 1},
       {"modifiedObjects", json::array({{{"id", "p3"}, {"kind", "person"}, {"eval", "A1"}, {"attributes", {{"name", "P3"}}}}})}},
      {{"id", "u2"}, {"datasetId", "ds1"}, {"baseVersion", 2}, {"removedObjectIds", {"p5"}}},
      {{"id", "u3"}, {"datasetId", "ds1"}, {"baseVersion", 3},
       {"addedObjects", json::array({{{"id", "q1"}, {"kind", "phone"}, {"eval", "B1"}}})},
       {"addedRelationships", json::array({{{"id", "q1-calls"}, {"source", "q1"}, {"target", "p7"}, {"kind", "calls"}, {"eval", "B1"}}})}},
      {{"id", "u4"}, {"datasetId", "ds1"}, {"baseVersion", 4}, {"removedRelationshipIds", {"p-rel10", "p-rel11"}}},
      {{"id", "u5"}, {"datasetId", "ds2"}, {"baseVersion", 1},
       {"modifiedObjects", json::array({{{"id", "z1"}, {"kind", "vehicle"}, {"eval", "X4"}}})},
       {"removedObjectIds", {"z4"}}},
      {{"id", "u6"}, {"datasetId", "ds1"}, {"baseVersion", 5},
       {"addedObjects", json::array({{{"id", "q2"}, {"kind", "account"}, {"eval", "C2"}}})}},
  };
  for (const auto& delta : deltas) {
    const Dataset before = ws.dataset(DatasetId(delta["datasetId"].get<std::string>()));
    const auto hashes_before = stored_hashes(ws);
    const UpdateReport report = ws.apply_update(delta);
    const auto [objects, rels] = touched_by(delta, before);
    for (const auto& doc : docs) {
      const auto expected = ws.read(doc, [&](const Document& d) { return oracle::stale_scan(d, objects, rels); });
      std::set<std::string> got;
      if (auto it = report.affected.find(doc); it != report.affected.end()) {
        for (const auto& s : it->second) got.insert(s.str());
      }
      r.expect(got == expected, "flagged set for " + delta["id"].get<std::string>() + " in " + doc.str());
      ws.read(doc, [&](const Document& d) {
        for (const auto& s : expected) {
          const auto& reasons = d.annotations(StateId(s)).stale_reasons;
          r.expect(std::find(reasons.begin(), reasons.end(), UpdateId(delta["id"].get<std::string>())) != reasons.end(), "reason missing");
        }
      });
    }
    r.expect(stored_hashes(ws) == hashes_before, "payload hash changed across " + delta["id"].get<std::string>());
  }
  for (const auto& doc : docs) {
    ws.read(doc, [&](const Document& d) {
      for (const auto& s : d.state_ids()) {
        r.expect(payload_hash(d.state(s).payload) == d.state(s).payload_hash, "stored hash no longer matches payload");
      }
    });
  }
  r.note = std::to_string(deltas.size()) + " deltas over 3 documents";
  return r;
}

json detail(Api& api, const std::string& doc) {
  return api.handle("GET", "/v1/documents/" + doc, nullptr, "alice").json_body();
}

Result persistence() {
  Result r;
  TempDir dir("accept-persist");
  ServiceConfig config;
  config.data_root = dir.path;
  config.case_id = CaseId("c");
  Rng rng(7007);
  std::vector<std::string> docs;
  std::map<std::string, json> before;
  {
    Api api(config);
    Case& ws = api.workspace();
    ws.load_dataset(fixtures::dataset_file("ds1", 8, "p"));
    for (int i = 0; i < 3; ++i) {
      const DocumentId id = ws.create_document("doc" + std::to_string(i), {DatasetId("ds1")}, UserId("alice"));
      ws.write(id, [&](Document& d) {
        int branches = 0;
        for (int s = 0; s < 15; ++s) random_step(d, branches, rng);
        d.add_log_comment(d.find_branch("main").value(), "note " + std::to_string(i), UserId("alice"));
        d.mark_for_report(random_state(d, rng), true, UserId("bob"));
      });
      docs.push_back(id.str());
    }
    for (const auto& d : docs) before[d] = detail(api, d);
  }

  {
    Api restarted(config);
    r.expect(restarted.warnings().empty(), "clean restart reported warnings");
    for (const auto& d : docs) r.expect(detail(restarted, d) == before[d], "document " + d + " differs after restart");
    restarted.workspace().read(DocumentId(docs[0]), [&](const Document& d) {
      for (const auto& s : d.state_ids()) {
        r.expect(payload_hash(d.state(s).payload) == d.state(s).payload_hash, "payload hash mismatch after restart");
      }
    });
  }

  // Truncate a leaf state of the second document.
  const std::string victim_doc = docs[1];
  std::string victim;
  {
    std::set<std::string> with_children;
    for (const auto& s : before[victim_doc]["states"]) {
      for (const auto& p : s["parents"]) with_children.insert(p.get<std::string>());
    }
    for (const auto& s : before[victim_doc]["states"]) {
      if (!with_children.contains(s["id"].get<std::string>())) victim = s["id"];
    }
  }
  const fs::path file = dir.path / "cases" / "c" / "documents" / victim_doc / "states" / (victim + ".json");
  const std::string bytes = read_file(file);
  std::ofstream(file, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 3);

  Api recovered(config);
  const auto warnings = recovered.warnings();
  r.expect(warnings.size() == 1 && warnings[0].message.rfind("CorruptStore", 0) == 0, "expected one CorruptStore warning");
  const json health = recovered.handle("GET", "/v1/health").json_body();
  r.expect(health["warnings"].size() == 1, "health does not surface the warning");
  for (const auto& d : docs) {
    const json after = detail(recovered, d);
    if (d != victim_doc) {
      r.expect(after == before[d], "untouched document " + d + " changed");
      continue;
    }
    r.expect(after["lostStates"] == json::array({victim}), "lost state not reported");
    for (std::size_t i = 0; i < after["states"].size(); ++i) {
      const json& s = after["states"][i];
      if (s["id"] == victim) {
        r.expect(s["lost"] == true, "victim not marked lost");
        r.expect(recovered.handle("GET", "/v1/documents/" + d + "/states/" + victim, nullptr, "alice").status == 500,
                 "lost state should answer CorruptStore");
      } else {
        r.expect(s == before[d]["states"][i], "surviving state " + s["id"].get<std::string>() + " changed");
      }
    }
    r.expect(after["branches"] == before[d]["branches"], "branch structure changed");
  }
  r.note = "3 documents, restart + truncated leaf " + victim;
  return r;
}

Result credibility_rules() {
  Result r;
  for (Credibility c : kAllCredibilities) {
    r.expect(credibility_from_dots(dot_count(c)) == c, "dot mapping not invertible");
    r.expect(dot_count(c) == 4 - level_number(c), "dot count rule");
  }
  r.expect(dot_count(Credibility::Evidence) == 3 && dot_count(Credibility::Knowledge) == 2 &&
               dot_count(Credibility::Assumption) == 1,
           "dot values");

  Rng rng(8008);
  const UserId alice("alice");
  Document doc = make_document(evidence_payload(3));
  const BranchId main = doc.find_branch("main").value();
  for (int i = 0; i < 50; ++i) {
    StateDraft d = doc.open_draft(main, alice);
    std::map<std::string, Value> attrs{{"name", std::string("n" + std::to_string(i))}};
    if (coin(rng)) attrs["height"] = 1.5 + i;
    const bool start_assumption = coin(rng);
    const ObjectId o = d.create_object("person", attrs, start_assumption ? Credibility::Assumption : Credibility::Knowledge, alice);
    doc.commit_state(main, d, "c", alice);
    const EntityObject original = doc.current_object(o);
    if (start_assumption) {
      doc.promote_credibility(o, alice);
      r.expect(doc.current_level(o) == Credibility::Knowledge, "promotion level");
      doc.demote_credibility(o, alice);
    } else {
      doc.demote_credibility(o, alice);
      r.expect(doc.current_level(o) == Credibility::Assumption, "demotion level");
      doc.promote_credibility(o, alice);
    }
    r.expect(doc.current_object(o) == original, "round trip changed object " + o.str());
  }

  for (const UserId& u : kUsers) {
    const BranchId b = u == alice ? main : doc.create_branch("b-" + u.str(), "", doc.root(), u);
    StateDraft d = doc.open_draft(b, u);
    for (const char* kind : {"person", "vehicle", "account", "phone", "realEstate", "placeholder", "other"}) {
      bool rejected = false;
      try {
        d.create_object(kind, {{"name", std::string("x")}}, Credibility::Evidence, u);
      } catch (const Error& e) {
        rejected = e.code() == ErrorCode::CredibilityViolation;
      }
      r.expect(rejected, std::string("evidence creation accepted for kind ") + kind);
    }
  }
  TempDir dir("accept-cred");
  ServiceConfig config;
  config.data_root = dir.path;
  Api api(config);
  api.handle("POST", "/v1/datasets", fixtures::dataset_file("ds", 2, "p"), "alice");
  const json created = api.handle("POST", "/v1/documents", {{"name", "n"}, {"datasetIds", {"ds"}}}, "alice").json_body();
  const std::string draft = api.handle("POST", "/v1/documents/" + created["id"].get<std::string>() + "/branches/" +
                                                   created["branches"][0]["id"].get<std::string>() + "/drafts",
                                       json::object(), "alice")
                                .json_body()["draftId"];
  for (const json c : {json(1), json("evidence"), json("Evidence")}) {
    const HttpResponse res = api.handle("POST", "/v1/drafts/" + draft + "/ops",
                                        {{"op", "createObject"}, {"kind", "person"}, {"credibility", c}}, "alice");
    r.expect(res.status == 400 && res.json_body()["code"] == "CredibilityViolation", "API accepted evidence creation");
  }
  r.note = "50 round trips, 21 rejected evidence creations, 3 API rejections";
  return r;
}

Result report_immutability() {
  Result r;
  TempDir dir("accept-report");
  Rng rng(9009);
  std::string hash;
  ReportId id;
  DocumentId doc_id;
  {
    Case ws(dir.path, CaseId("c"));
    ws.load_dataset(fixtures::dataset_file("ds", 8, "p"));
    doc_id = ws.create_document("d", {DatasetId("ds")}, UserId("alice"));
    std::vector<std::pair<StateId, std::string>> sections;
    ws.write(doc_id, [&](Document& d) {
      int branches = 0;
      for (int i = 0; i < 10; ++i) random_step(d, branches, rng);
      for (int i = 0; i < 3; ++i) {
        const StateId s = random_state(d, rng);
        d.mark_for_report(s, true, UserId("alice"));
        sections.emplace_back(s, "section " + std::to_string(i) + " <b>&");
      }
    });
    const ReportDocument report = ws.build_report(doc_id, sections, "Final", UserId("alice"));
    id = report.id;
    hash = report_hash(report);

    int commits = 0, merges = 0;
    ws.write(doc_id, [&](Document& d) {
      const BranchId main = d.find_branch("main").value();
      for (int i = 0; i < 20; ++i) {
        if (i % 4 == 3) {
          const StateId a = random_state(d, rng), b = random_state(d, rng);
          merge(d, main, a, b, MergeSelection::everything(diff(d, a, b, UserId("alice"))), UserId("alice"));
          ++merges;
        } else {
          StateDraft draft = d.open_draft(main, UserId("alice"));
          random_edits(d, draft, UserId("alice"), rng, 4);
          d.commit_state(main, draft, "later", UserId("alice"));
          ++commits;
        }
      }
      for (const auto& [s, _] : sections) d.mark_for_report(s, false, UserId("alice"));
    });
    r.expect(report_hash(report) == hash, "in-memory report changed");
    r.expect(report_hash(ws.report(id)) == hash, "stored report changed");
    r.note = std::to_string(commits) + " commits + " + std::to_string(merges) + " merges";
  }
  Case reopened(dir.path, CaseId("c"));
  const ReportDocument back = reopened.report(id);
  r.expect(report_hash(back) == hash, "report changed across restart");
  const std::string exported = export_report(back, "json");
  const ReportDocument parsed = report_from_json(json::parse(exported));
  r.expect(parsed == back, "JSON export does not round-trip");
  r.expect(export_report(parsed, "json") == exported, "re-export differs byte-wise");
  return r;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* title;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "DAG laws under random create/branch/commit/merge", dag_laws},
      {2, "diff partitions equal brute-force comparison", diff_oracle},
      {3, "merge algebra", merge_algebra},
      {4, "assumption visibility equals exhaustive ancestry walk", visibility},
      {5, "layout determinism, freeze, finiteness and speed", layout_contracts},
      {6, "update staleness equals payload reference scan", staleness},
      {7, "persistence round trip and corrupt-state recovery", persistence},
      {8, "credibility rules", credibility_rules},
      {9, "report immutability and JSON round trip", report_immutability},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Result res;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res.ok = false;
      res.first_failure = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    if (!res.ok) ++failed;
    std::printf("%s criterion %d: %s [%ld checks, %.2f s]%s%s\n", res.ok ? "PASS" : "FAIL", c.number, c.title, res.checks,
                secs, res.note.empty() ? "" : (" " + res.note).c_str(),
                res.ok ? "" : (" -- " + res.first_failure).c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
