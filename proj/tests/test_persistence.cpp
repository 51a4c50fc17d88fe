#include <fstream>

#include "casegraph/persistence.hpp"
#include "test_support.hpp"

using namespace casegraph;
using fixtures::evidence_payload;
using fixtures::make_document;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

const UserId alice("alice"), bob("bob");

struct History {
  Document doc = make_document(evidence_payload(4));
  StateId s1, s2, m;
  ObjectId assumption;
};

History build_history() {
  History h;
  Document& doc = h.doc;
  const BranchId main = doc.find_branch("main").value();
  StateDraft d = doc.open_draft(main, alice);
  h.assumption = d.create_object("person", {{"dob", Date{"1990-01-01"}}}, Credibility::Assumption, alice);
  h.s1 = doc.commit_state(main, d, "one", alice);
  doc.add_log_comment(main, "note", alice);
  const BranchId other = doc.create_branch("other", "h", doc.root(), bob);
  StateDraft o = doc.open_draft(other, bob);
  o.group_nodes({ObjectId("e0"), ObjectId("e1")}, "pair", std::string("#123456"), bob);
  h.s2 = doc.commit_state(other, o, "two", bob);
  h.m = doc.commit_merge(main, h.s1, h.s2, doc.state(h.s1).payload, "merge", alice);
  doc.promote_credibility(h.assumption, alice);
  doc.mark_for_report(h.m, true, alice);
  doc.annotate_state(h.s1, "remember", alice);
  doc.mark_stale({ObjectId("e2")}, {}, UpdateId("u1"));
  return h;
}

void truncate_file(const fs::path& p) {
  const std::string bytes = read_file(p);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
}

}  // namespace

TEST_SUITE("persistence") {
  TEST_CASE("save and load round trip") {
    TempDir dir("persist");
    History h = build_history();
    DocumentStore store(dir.path / "d1");
    store.save(h.doc);

    std::vector<LoadWarning> warnings;
    const Document back = DocumentStore::load(dir.path / "d1", warnings, fixtures::counter_clock());
    CHECK(warnings.empty());
    CHECK(back.state_ids() == h.doc.state_ids());
    for (const auto& id : h.doc.state_ids()) {
      CHECK(back.state(id).payload == h.doc.state(id).payload);
      CHECK(back.parents(id) == h.doc.parents(id));
    }
    CHECK(back.branches().size() == 2);
    CHECK(back.comments().size() == 1);
    CHECK(back.events().size() == 1);
    CHECK(back.current_level(h.assumption) == Credibility::Knowledge);
    CHECK(back.report_candidates() == std::vector<StateId>{h.m});
    CHECK(back.annotations(h.s1).note == "remember");
    CHECK(back.annotations(h.s1).stale());
    CHECK(back.introduced_in(h.assumption) == h.s1);
    CHECK(oracle::check_dag(oracle::parent_map(back)).ok());
  }

  TEST_CASE("state files are verified against their content hash") {
    History h = build_history();
    json j = to_json(h.doc.state(h.s1));
    CHECK(state_from_json(j, "x").payload == h.doc.state(h.s1).payload);
    j["message"] = "tampered";
    CHECK_CODE(state_from_json(j, "x"), ErrorCode::CorruptStore);
  }

  TEST_CASE("a truncated state file becomes a lost node; the rest loads") {
    TempDir dir("persist-lost");
    History h = build_history();
    DocumentStore(dir.path / "d1").save(h.doc);
    truncate_file(dir.path / "d1" / "states" / (h.s2.str() + ".json"));

    std::vector<LoadWarning> warnings;
    const Document back = DocumentStore::load(dir.path / "d1", warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].message.rfind("CorruptStore", 0) == 0);
    CHECK(back.lost_states() == std::set<StateId>{h.s2});
    CHECK_CODE(back.state(h.s2), ErrorCode::CorruptStore);
    CHECK(back.state(h.m).payload == h.doc.state(h.m).payload);
    CHECK(back.state(h.s1).payload == h.doc.state(h.s1).payload);
    CHECK(back.ancestry(h.m).contains(h.s2));
  }

  TEST_CASE("unreferenced state files are ignored with a warning") {
    TempDir dir("persist-orphan");
    History h = build_history();
    DocumentStore(dir.path / "d1").save(h.doc);
    write_file_atomic(dir.path / "d1" / "states" / "orphan.json", "{}");
    std::vector<LoadWarning> warnings;
    const Document back = DocumentStore::load(dir.path / "d1", warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].message.find("unreferenced") != std::string::npos);
    CHECK(back.state_ids().size() == h.doc.state_ids().size());
  }

  TEST_CASE("broken index files are fatal") {
    TempDir dir("persist-index");
    History h = build_history();
    DocumentStore(dir.path / "d1").save(h.doc);
    truncate_file(dir.path / "d1" / "branches.json");
    std::vector<LoadWarning> warnings;
    CHECK_CODE(DocumentStore::load(dir.path / "d1", warnings), ErrorCode::CorruptStore);
  }

  TEST_CASE("incremental saves keep state files write-once") {
    TempDir dir("persist-inc");
    History h = build_history();
    DocumentStore store(dir.path / "d1");
    store.save(h.doc);
    const fs::path f = dir.path / "d1" / "states" / (h.s1.str() + ".json");
    const auto stamp = fs::last_write_time(f);
    const std::string bytes = read_file(f);
    const BranchId main = h.doc.find_branch("main").value();
    StateDraft d = h.doc.open_draft(main, alice);
    const StateId s = h.doc.commit_state(main, d, "more", alice);
    store.save(h.doc);
    CHECK(fs::exists(dir.path / "d1" / "states" / (s.str() + ".json")));
    CHECK(read_file(f) == bytes);
    CHECK(fs::last_write_time(f) == stamp);
  }
}
