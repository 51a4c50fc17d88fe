#include "casegraph/document.hpp"
#include "test_support.hpp"

using namespace casegraph;
using fixtures::evidence_payload;
using fixtures::make_document;

namespace {

const UserId alice("alice"), bob("bob");

StateId commit_new_object(Document& doc, const BranchId& b, const UserId& who, Credibility c = Credibility::Knowledge,
                          ObjectId* created = nullptr) {
  StateDraft d = doc.open_draft(b, who);
  const ObjectId id = d.create_object("person", {{"name", std::string("x")}}, c, who);
  if (created) *created = id;
  return doc.commit_state(b, d, "add", who);
}

}  // namespace

TEST_SUITE("document") {
  TEST_CASE("root state and main branch") {
    Document doc = make_document(evidence_payload(6));
    const AnalysisState& root = doc.state(doc.root());
    CHECK(root.is_root());
    CHECK(root.payload.objects.size() == 6);
    CHECK(root.payload.relationships.size() == 5);
    const BranchId main = doc.find_branch("main").value();
    CHECK(doc.branch(main).owner == alice);
    CHECK(doc.branch(main).entries.empty());
    CHECK(doc.tip(main) == doc.root());
    CHECK(doc.ancestry(doc.root()) == std::set<StateId>{doc.root()});
  }

  TEST_CASE("commit appends immutable states with distinct ids") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    StateDraft d = doc.open_draft(main, alice);
    const StateId s1 = doc.commit_state(main, d, "unchanged", alice);
    CHECK(s1 != doc.root());
    CHECK(doc.state(s1).payload_hash == doc.state(doc.root()).payload_hash);
    CHECK(doc.state(s1).parents == std::vector<StateId>{doc.root()});
    CHECK(d.closed());
    CHECK_CODE(doc.commit_state(main, d, "again", alice), ErrorCode::DraftClosed);
    CHECK(doc.tip(main) == s1);
    CHECK(doc.state(s1).timestamp.seq > doc.state(doc.root()).timestamp.seq);
  }

  TEST_CASE("ownership and stale drafts") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    CHECK_CODE(doc.open_draft(main, bob), ErrorCode::NotBranchOwner);
    StateDraft d = doc.open_draft(main, alice);
    CHECK_CODE(doc.commit_state(main, d, "m", bob), ErrorCode::NotBranchOwner);

    StateDraft first = doc.open_draft(main, alice);
    StateDraft second = doc.open_draft(main, alice);
    doc.commit_state(main, first, "first", alice);
    CHECK_CODE(doc.commit_state(main, second, "second", alice), ErrorCode::StaleDraft);
    CHECK_CODE(doc.add_log_comment(main, "hi", bob), ErrorCode::NotBranchOwner);
  }

  TEST_CASE("branches, comments and timeline order") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    const StateId s1 = commit_new_object(doc, main, alice);
    const BranchId money = doc.create_branch("money-trail", "follow the money", doc.root(), bob);
    CHECK(doc.branch(money).created_from == doc.root());
    CHECK(doc.branch(money).entries.empty());
    CHECK_CODE(doc.create_branch("money-trail", "", s1, bob), ErrorCode::DuplicateBranchName);
    CHECK_CODE(doc.create_branch("x", "", StateId("nope"), bob), ErrorCode::UnknownState);
    const BranchId mid = doc.create_branch("mid", "", s1, alice);
    CHECK(doc.tip(mid) == s1);

    const CommentId c1 = doc.add_log_comment(money, "requested bank records 2024-03-01", bob);
    const StateId s2 = commit_new_object(doc, money, bob);
    const CommentId c2 = doc.add_log_comment(money, "second", bob);
    const auto& entries = doc.branch(money).entries;
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].id == c1.str());
    CHECK(entries[1].id == s2.str());
    CHECK(entries[2].id == c2.str());
    for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i - 1].timestamp < entries[i].timestamp);
    CHECK(doc.tip(money) == s2);
  }

  TEST_CASE("ancestry over a merge and checkout") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    const StateId b = commit_new_object(doc, main, alice);
    const BranchId other = doc.create_branch("other", "", doc.root(), alice);
    const StateId c = commit_new_object(doc, other, alice);
    const StateId m = doc.commit_merge(main, b, c, doc.state(b).payload, "merge", alice);
    CHECK(doc.state(m).is_merge());
    CHECK(doc.ancestry(m) == std::set<StateId>{doc.root(), b, c, m});
    const auto walked = oracle::walk_ancestry(oracle::parent_map(doc), m.str());
    CHECK(walked.size() == 4);

    const Snapshot mine = doc.checkout(m, alice);
    CHECK(mine.editable);
    CHECK(mine.state->parents.size() == 2);
    CHECK_FALSE(doc.checkout(m, bob).editable);
    CHECK_CODE(doc.checkout(StateId("missing"), bob), ErrorCode::UnknownState);
    CHECK_CODE(doc.commit_merge(main, b, c, doc.state(b).payload, "merge", bob), ErrorCode::NotBranchOwner);
  }

  TEST_CASE("report flags and annotations") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    const StateId s1 = commit_new_object(doc, main, alice);
    doc.mark_for_report(s1, true, bob);
    CHECK(doc.report_candidates() == std::vector<StateId>{s1});
    doc.mark_for_report(s1, false, alice);
    CHECK(doc.report_candidates().empty());
    CHECK_CODE(doc.mark_for_report(StateId("none"), true, alice), ErrorCode::UnknownState);
    const std::string hash = doc.state(s1).payload_hash;
    doc.annotate_state(s1, "check alibi", alice);
    CHECK(doc.annotations(s1).note == "check alibi");
    CHECK(doc.state(s1).payload_hash == hash);
    CHECK_CODE(doc.annotate_state(s1, "x", bob), ErrorCode::NotAuthor);
  }

  TEST_CASE("promotion is advertised, demotion reverts at the next commit") {
    Document doc = make_document(evidence_payload(2));
    const BranchId main = doc.find_branch("main").value();
    ObjectId a;
    const StateId s1 = commit_new_object(doc, main, alice, Credibility::Assumption, &a);
    CHECK_CODE(doc.demote_credibility(a, alice), ErrorCode::WrongLevel);
    CHECK_CODE(doc.promote_credibility(a, bob), ErrorCode::NotAuthor);

    const KnowledgeEvent up = doc.promote_credibility(a, alice);
    CHECK(up.to == Credibility::Knowledge);
    CHECK(doc.current_level(a) == Credibility::Knowledge);
    CHECK(doc.state(s1).payload.objects.at(a).credibility == Credibility::Assumption);
    const BranchId bobs = doc.create_branch("bob", "", doc.root(), bob);
    CHECK(doc.pending_events(bobs).size() == 1);
    CHECK(doc.pending_events_for(bob).size() == 1);
    CHECK(doc.pending_events_for(alice).empty());
    doc.dismiss_event(bob, up.id);
    CHECK(doc.pending_events_for(bob).empty());

    // Bob's branch never had the object; incorporating brings it in as knowledge.
    StateDraft bd = doc.open_draft(bobs, bob);
    bd.incorporate_event(doc.event(up.id), bob);
    const StateId b1 = doc.commit_state(bobs, bd, "take knowledge", bob);
    CHECK(doc.state(b1).payload.objects.at(a).credibility == Credibility::Knowledge);
    CHECK(doc.resolve_view(b1, bob).payload.objects.contains(a));
    CHECK(doc.pending_events(bobs).empty());

    const KnowledgeEvent down = doc.demote_credibility(a, alice);
    CHECK(down.to == Credibility::Assumption);
    StateDraft bd2 = doc.open_draft(bobs, bob);
    const StateId b2 = doc.commit_state(bobs, bd2, "after demotion", bob);
    CHECK(doc.state(b2).payload.objects.at(a).credibility == Credibility::Assumption);
    CHECK_FALSE(doc.resolve_view(b2, bob).payload.objects.contains(a));
    CHECK(doc.state(b1).payload.objects.at(a).credibility == Credibility::Knowledge);
  }

  TEST_CASE("freeze: commits never move existing positions") {
    Document doc = make_document(evidence_payload(5));
    const BranchId main = doc.find_branch("main").value();
    const PositionMap before = positions_of(doc.state(doc.root()).payload);
    StateDraft d = doc.open_draft(main, alice);
    const ObjectId n = d.create_object("person", {}, Credibility::Knowledge, alice);
    d.create_relationship(n, ObjectId("e2"), "knows", true, {}, Credibility::Knowledge, alice);
    d.group_nodes({ObjectId("e0"), ObjectId("e1")}, "g", std::nullopt, alice);
    const StateId s = doc.commit_state(main, d, "c", alice);
    const PositionMap after = positions_of(doc.state(s).payload);
    for (const auto& [id, p] : before) CHECK(after.at(id) == p);
    CHECK(after.contains(n));
  }

  TEST_CASE("staleness flags and acknowledgements") {
    Document doc = make_document(evidence_payload(3));
    const BranchId main = doc.find_branch("main").value();
    const StateId s1 = commit_new_object(doc, main, alice);
    const auto hit = doc.mark_stale({ObjectId("e1")}, {}, UpdateId("u1"));
    CHECK(hit == std::set<StateId>{doc.root(), s1});
    doc.mark_stale({}, {RelationshipId("r0")}, UpdateId("u2"));
    CHECK(doc.annotations(s1).stale_reasons.size() == 2);
    CHECK_CODE(doc.acknowledge_update(s1, UpdateId("u1"), bob), ErrorCode::NotAuthor);
    doc.acknowledge_update(s1, UpdateId("u1"), alice);
    CHECK(doc.annotations(s1).stale());
    doc.acknowledge_update(s1, UpdateId("u2"), alice);
    CHECK_FALSE(doc.annotations(s1).stale());
    CHECK_CODE(doc.acknowledge_update(s1, UpdateId("u2"), alice), ErrorCode::NotStale);
    CHECK(doc.mark_stale({ObjectId("zzz")}, {}, UpdateId("u3")).empty());
  }
}
