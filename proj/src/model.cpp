#include "casegraph/model.hpp"

#include "casegraph/error.hpp"

namespace casegraph {

Credibility credibility_from_dots(int dots) {
  if (dots < 1 || dots > 3) fail(ErrorCode::InvariantViolation, "dot count out of range: " + std::to_string(dots));
  return static_cast<Credibility>(4 - dots);
}

Credibility credibility_from_level(int level) {
  if (level < 1 || level > 3) fail(ErrorCode::InvariantViolation, "credibility level out of range: " + std::to_string(level));
  return static_cast<Credibility>(level);
}

std::string_view to_string(Credibility c) noexcept {
  switch (c) {
    case Credibility::Evidence: return "evidence";
    case Credibility::Knowledge: return "knowledge";
    case Credibility::Assumption: return "assumption";
  }
  return "unknown";
}

bool EvaluationCode::valid(char source, int validity) noexcept {
  const bool source_ok = source == 'A' || source == 'B' || source == 'C' || source == 'X';
  return source_ok && validity >= 1 && validity <= 4;
}

EvaluationCode EvaluationCode::parse(std::string_view text) {
  if (text.size() != 2 || text[1] < '0' || text[1] > '9' || !valid(text[0], text[1] - '0')) {
    fail(ErrorCode::InvalidEvaluationCode, "'" + std::string(text) + "' is not in {A,B,C,X}x{1,2,3,4}");
  }
  return EvaluationCode{text[0], text[1] - '0'};
}

std::string EvaluationCode::str() const {
  return std::string(1, source_reliability) + std::to_string(info_validity);
}

PositionMap positions_of(const Payload& payload) {
  PositionMap out;
  for (const auto& [id, visual] : payload.visuals) out.emplace(id, visual.position);
  return out;
}

void validate_element_provenance(std::string_view what, const std::string& id, Credibility credibility,
                                 const std::optional<UserId>& author,
                                 const std::optional<DatasetId>& source_dataset,
                                 const std::optional<EvaluationCode>& evaluation) {
  const std::string where = std::string(what) + " " + id;
  if (credibility == Credibility::Evidence) {
    if (!source_dataset) fail(ErrorCode::InvariantViolation, where + ": evidence without source dataset");
    if (author) fail(ErrorCode::InvariantViolation, where + ": evidence must not carry an author");
  } else {
    if (!author) fail(ErrorCode::InvariantViolation, where + ": user data without author");
    if (source_dataset) fail(ErrorCode::InvariantViolation, where + ": user data must not carry a source dataset");
    if (evaluation) fail(ErrorCode::InvariantViolation, where + ": evaluation code on user data");
  }
}

namespace {

void validate_attributes(const std::string& where, const AttributeMap& attributes) {
  for (const auto& [key, attr] : attributes) {
    if (attr.credibility != Credibility::Evidence && !attr.author) {
      fail(ErrorCode::InvariantViolation, where + ": user attribute '" + key + "' without author");
    }
  }
}

}  // namespace

void validate_payload(const Payload& payload) {
  for (const auto& [id, object] : payload.objects) {
    if (id != object.id) fail(ErrorCode::InvariantViolation, "object key mismatch " + id.str());
    validate_element_provenance("object", id.str(), object.credibility, object.author, object.source_dataset,
                                object.evaluation);
    if (object.is_placeholder && object.credibility == Credibility::Evidence) {
      fail(ErrorCode::InvariantViolation, "placeholder " + id.str() + " cannot be evidence");
    }
    // Stored attribute levels may be more trusted than a demoted owner; the
    // effective level is clamped at read time (effective_credibility).
    validate_attributes("object " + id.str(), object.attributes);
    if (!payload.visuals.contains(id)) fail(ErrorCode::InvariantViolation, "object " + id.str() + " has no visual");
  }
  for (const auto& [id, rel] : payload.relationships) {
    if (id != rel.id) fail(ErrorCode::InvariantViolation, "relationship key mismatch " + id.str());
    validate_element_provenance("relationship", id.str(), rel.credibility, rel.author, rel.source_dataset,
                                rel.evaluation);
    if (!payload.objects.contains(rel.source) || !payload.objects.contains(rel.target)) {
      fail(ErrorCode::InvariantViolation, "relationship " + id.str() + " has a missing endpoint");
    }
    validate_attributes("relationship " + id.str(), rel.attributes);
  }
  std::map<ObjectId, GroupId> owner_of;
  for (const auto& [gid, group] : payload.groups) {
    if (gid != group.id) fail(ErrorCode::InvariantViolation, "group key mismatch " + gid.str());
    if (group.members.empty()) fail(ErrorCode::InvariantViolation, "group " + gid.str() + " is empty");
    for (const auto& member : group.members) {
      if (!payload.objects.contains(member)) {
        fail(ErrorCode::InvariantViolation, "group " + gid.str() + " member " + member.str() + " missing");
      }
      if (!owner_of.emplace(member, gid).second) {
        fail(ErrorCode::InvariantViolation, "node " + member.str() + " belongs to two groups");
      }
    }
  }
  for (const auto& [id, visual] : payload.visuals) {
    if (id != visual.object_id) fail(ErrorCode::InvariantViolation, "visual key mismatch " + id.str());
    if (!payload.objects.contains(id)) fail(ErrorCode::InvariantViolation, "visual for absent object " + id.str());
    if (visual.focus && visual.minimized) fail(ErrorCode::InvariantViolation, "node " + id.str() + " focused and minimized");
    auto it = owner_of.find(id);
    const std::optional<GroupId> expected = it == owner_of.end() ? std::nullopt : std::optional(it->second);
    if (visual.group != expected) fail(ErrorCode::InvariantViolation, "node " + id.str() + " group link inconsistent");
  }
}

std::vector<RelationshipId> drop_dangling_relationships(Payload& payload) {
  std::vector<RelationshipId> dropped;
  for (auto it = payload.relationships.begin(); it != payload.relationships.end();) {
    const auto& rel = it->second;
    if (!payload.objects.contains(rel.source) || !payload.objects.contains(rel.target)) {
      dropped.push_back(it->first);
      it = payload.relationships.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

}  // namespace casegraph
