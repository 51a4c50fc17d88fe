#include "casegraph/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "casegraph/error.hpp"
#include "casegraph/visibility.hpp"

namespace casegraph {

ReportDocument build_report(const Document& doc, const std::vector<std::pair<StateId, std::string>>& sections,
                            const std::string& title, const UserId& author, ReportId id, std::int64_t created_at) {
  if (sections.empty()) fail(ErrorCode::EmptySelection, "a report needs at least one section");
  ReportDocument report;
  report.id = std::move(id);
  report.case_id = doc.meta().case_id;
  report.document = doc.id();
  report.title = title;
  report.created_by = author;
  report.created_at = created_at;
  for (const auto& [state, description] : sections) {
    if (!doc.has_state(state)) fail(ErrorCode::UnknownState, "state " + state.str() + " not in document " + doc.id().str());
    if (!doc.annotations(state).report_flag) {
      fail(ErrorCode::UnflaggedState, "state " + state.str() + " is not marked for the report");
    }
    ReportSection section;
    section.state = state;
    section.snapshot = doc.resolve_view(state, author).payload;
    section.positions = positions_of(section.snapshot);
    section.description = description;
    report.sections.push_back(std::move(section));
  }
  return report;
}

json to_json(const ReportDocument& r) {
  json sections = json::array();
  for (const auto& s : r.sections) {
    sections.push_back({{"stateId", s.state.str()},
                        {"snapshotPayload", to_json(s.snapshot)},
                        {"positions", to_json(s.positions)},
                        {"description", s.description}});
  }
  return {{"id", r.id.str()},
          {"caseId", r.case_id.str()},
          {"documentId", r.document.str()},
          {"title", r.title},
          {"createdBy", r.created_by.str()},
          {"createdAt", r.created_at},
          {"formatVersion", r.format_version},
          {"sections", sections}};
}

ReportDocument report_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  ReportDocument r;
  r.id = ReportId(require_string(j, "id", path));
  r.case_id = CaseId(require_string(j, "caseId", path));
  r.document = DocumentId(require_string(j, "documentId", path));
  r.title = require_string(j, "title", path);
  r.created_by = UserId(require_string(j, "createdBy", path));
  const json& created = require(j, "createdAt", path);
  if (!created.is_number_integer()) fail(ErrorCode::SchemaViolation, path + ".createdAt: expected integer");
  r.created_at = created.get<std::int64_t>();
  const json& version = require(j, "formatVersion", path);
  if (!version.is_number_integer() || version.get<int>() != ReportDocument::kFormatVersion) {
    fail(ErrorCode::SchemaViolation, path + ".formatVersion: unsupported");
  }
  r.format_version = version.get<int>();
  const json& sections = require(j, "sections", path);
  require_array(sections, path + ".sections");
  if (sections.empty()) fail(ErrorCode::SchemaViolation, path + ".sections: must not be empty");
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const std::string p = path + ".sections[" + std::to_string(i) + "]";
    ReportSection s;
    s.state = StateId(require_string(sections[i], "stateId", p));
    s.snapshot = payload_from_json(require(sections[i], "snapshotPayload", p), p + ".snapshotPayload");
    s.positions = positions_from_json(require(sections[i], "positions", p), p + ".positions");
    s.description = optional_string(sections[i], "description", p);
    r.sections.push_back(std::move(s));
  }
  return r;
}

std::string report_hash(const ReportDocument& report) { return sha256_hex(canonical_dump(to_json(report))); }

std::string export_report(const ReportDocument& report, const std::string& format) {
  if (format == "json") return canonical_dump(to_json(report));
  if (format == "html") return render_html(report);
  fail(ErrorCode::UnsupportedFormat, "export format '" + format + "' (expected json or html)");
}

// ---------------------------------------------------------------------------
// HTML
// ---------------------------------------------------------------------------

namespace {

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr double kNodeRadius = 8.0;
constexpr double kMinimizedRadius = 3.0;
constexpr double kMargin = 40.0;

std::string label_of(const EntityObject& o) {
  for (const char* key : {"name", "label", "number", "plate"}) {
    auto it = o.attributes.find(key);
    if (it != o.attributes.end() && std::holds_alternative<std::string>(it->second.value)) {
      return std::get<std::string>(it->second.value);
    }
  }
  return o.id.str();
}

void draw_dots(std::ostringstream& svg, Vec2 at, double radius, int dots) {
  const double y = at.y - radius - 5.0;
  for (int i = 0; i < dots; ++i) {
    const double x = at.x + (i - (dots - 1) / 2.0) * 5.0;
    svg << "<circle class=\"dot\" cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"1.6\" fill=\"#222\"/>";
  }
}

void render_section(std::ostringstream& out, const ReportSection& section, std::size_t index) {
  const Payload& p = section.snapshot;
  auto pos = [&](const ObjectId& id) {
    auto it = section.positions.find(id);
    return it == section.positions.end() ? Vec2{} : it->second;
  };

  // Nodes of collapsed groups are drawn as one aggregate at the members' centroid.
  std::map<ObjectId, GroupId> collapsed_into;
  std::map<GroupId, Vec2> aggregate_at;
  for (const auto& [gid, g] : p.groups) {
    if (!g.collapsed) continue;
    Vec2 c{};
    for (const auto& m : g.members) {
      c.x += pos(m).x;
      c.y += pos(m).y;
      collapsed_into.emplace(m, gid);
    }
    c.x /= static_cast<double>(g.members.size());
    c.y /= static_cast<double>(g.members.size());
    aggregate_at.emplace(gid, c);
  }
  auto anchor = [&](const ObjectId& id) {
    auto it = collapsed_into.find(id);
    return it == collapsed_into.end() ? pos(id) : aggregate_at.at(it->second);
  };

  double minx = 0, maxx = 0, miny = 0, maxy = 0;
  bool first = true;
  for (const auto& [id, _] : p.objects) {
    const Vec2 v = anchor(id);
    if (first) {
      minx = maxx = v.x;
      miny = maxy = v.y;
      first = false;
    }
    minx = std::min(minx, v.x);
    maxx = std::max(maxx, v.x);
    miny = std::min(miny, v.y);
    maxy = std::max(maxy, v.y);
  }
  const double w = (maxx - minx) + 2 * kMargin, h = (maxy - miny) + 2 * kMargin;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << num(minx - kMargin) << ' ' << num(miny - kMargin)
      << ' ' << num(w) << ' ' << num(h) << "\" width=\"" << num(std::min(w, 900.0)) << "\">";

  for (const auto& [rid, r] : p.relationships) {
    const auto gs = collapsed_into.find(r.source), gt = collapsed_into.find(r.target);
    if (gs != collapsed_into.end() && gt != collapsed_into.end() && gs->second == gt->second) continue;
    const Vec2 a = anchor(r.source), b = anchor(r.target);
    const RenderHints hints = render_hints(r);
    svg << "<line class=\"rel\" data-id=\"" << escape(rid.str()) << "\" x1=\"" << num(a.x) << "\" y1=\"" << num(a.y)
        << "\" x2=\"" << num(b.x) << "\" y2=\"" << num(b.y) << "\" stroke=\"#666\"";
    if (hints.dashed) svg << " stroke-dasharray=\"4 3\"";
    svg << "/>";
  }

  std::map<GroupId, std::string> tag_of;
  for (const auto& [gid, g] : p.groups) {
    if (g.tag_color) tag_of.emplace(gid, *g.tag_color);
  }

  for (const auto& [oid, o] : p.objects) {
    if (collapsed_into.contains(oid)) continue;
    const NodeVisual& visual = p.visuals.at(oid);
    const Vec2 at = pos(oid);
    const RenderHints hints = render_hints(o);
    const double radius = visual.minimized ? kMinimizedRadius : kNodeRadius;
    if (visual.focus) {
      svg << "<circle class=\"focus-ring\" cx=\"" << num(at.x) << "\" cy=\"" << num(at.y) << "\" r=\""
          << num(radius + 4) << "\" fill=\"none\" stroke=\"#d33\" stroke-width=\"2\"/>";
    }
    svg << "<circle class=\"node" << (visual.minimized ? " minimized" : "") << "\" data-id=\"" << escape(oid.str())
        << "\" cx=\"" << num(at.x) << "\" cy=\"" << num(at.y) << "\" r=\"" << num(radius)
        << "\" fill=\"#fff\" stroke=\"#222\"";
    if (hints.dashed) svg << " stroke-dasharray=\"3 2\"";
    svg << "/>";
    if (visual.group) {
      if (auto t = tag_of.find(*visual.group); t != tag_of.end()) {
        svg << "<rect class=\"tag\" x=\"" << num(at.x - radius) << "\" y=\"" << num(at.y + radius + 2) << "\" width=\""
            << num(2 * radius) << "\" height=\"3\" fill=\"" << escape(t->second) << "\"/>";
      }
    }
    if (!visual.minimized) {
      draw_dots(svg, at, radius, hints.dots);
      svg << "<text class=\"label\" x=\"" << num(at.x) << "\" y=\"" << num(at.y + radius + 14)
          << "\" font-size=\"9\" text-anchor=\"middle\">" << escape(label_of(o)) << "</text>";
    }
  }

  for (const auto& [gid, at] : aggregate_at) {
    const Group& g = p.groups.at(gid);
    const double radius = kNodeRadius * 1.6;
    svg << "<circle class=\"group\" data-id=\"" << escape(gid.str()) << "\" cx=\"" << num(at.x) << "\" cy=\""
        << num(at.y) << "\" r=\"" << num(radius) << "\" fill=\"#eef\" stroke=\""
        << escape(g.tag_color.value_or("#226")) << "\" stroke-width=\"2\"/>";
    svg << "<text class=\"badge\" x=\"" << num(at.x) << "\" y=\"" << num(at.y + 4)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << g.badge_count() << "</text>";
    svg << "<text class=\"label\" x=\"" << num(at.x) << "\" y=\"" << num(at.y + radius + 14)
        << "\" font-size=\"9\" text-anchor=\"middle\">" << escape(g.name) << "</text>";
  }
  svg << "</svg>";

  out << "<section id=\"section-" << index + 1 << "\" data-state=\"" << escape(section.state.str()) << "\">\n"
      << "<h2>View " << index + 1 << "</h2>\n"
      << svg.str() << "\n"
      << "<div class=\"description\">" << escape(section.description) << "</div>\n"
      << "</section>\n";
}

}  // namespace

std::string render_html(const ReportDocument& report) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << escape(report.title)
      << "</title>\n<style>body{font-family:sans-serif;margin:2em}section{margin-bottom:3em}"
         ".description{white-space:pre-wrap}</style>\n</head>\n<body>\n"
      << "<h1>" << escape(report.title) << "</h1>\n"
      << "<p class=\"meta\">Case " << escape(report.case_id.str()) << ", compiled by " << escape(report.created_by.str())
      << "</p>\n";
  for (std::size_t i = 0; i < report.sections.size(); ++i) render_section(out, report.sections[i], i);
  out << "</body>\n</html>\n";
  return out.str();
}

}  // namespace casegraph
