// casegraph command line: ingestion, updates, the HTTP service and reports.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "casegraph/case.hpp"
#include "casegraph/persistence.hpp"
#include "casegraph/report.hpp"
#include "casegraph/service.hpp"

namespace fs = std::filesystem;
using namespace casegraph;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Common {
  std::string config;
  std::string data_root;
  std::string case_id;
  std::string user = "cli";
};

ServiceConfig resolve(const Common& c) {
  ServiceConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    apply_environment(cfg);
  }
  if (!c.data_root.empty()) cfg.data_root = c.data_root;
  if (cfg.data_root.empty()) cfg.data_root = "casegraph-data";
  if (!c.case_id.empty()) cfg.case_id = CaseId(c.case_id);
  return cfg;
}

json read_json(const std::string& file) {
  const json j = json::parse(read_file(file), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::SchemaViolation, file + ": not valid JSON");
  return j;
}

std::unique_ptr<Case> open_case(const ServiceConfig& cfg) {
  auto ws = std::make_unique<Case>(cfg.data_root, cfg.case_id);
  for (const auto& w : ws->warnings()) std::cerr << "warning: " << w.file << ": " << w.message << "\n";
  return ws;
}

void emit(const std::string& bytes, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << bytes;
    if (bytes.empty() || bytes.back() != '\n') std::cout << "\n";
  } else {
    write_file_atomic(out, bytes);
  }
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Service config file");
  cmd->add_option("--data-root", c.data_root, "Data root (overrides config and CASEGRAPH_DATA_ROOT)");
  cmd->add_option("--case", c.case_id, "Case id");
  cmd->add_option("--user", c.user, "Acting user id");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"casegraph: provenance-tracked investigation graphs"};
  app.require_subcommand(1);
  Common common;

  std::string file;
  auto* ingest = app.add_subcommand("ingest", "Load a dataset file into the case");
  ingest->add_option("file", file, "Dataset JSON")->required();
  add_common(ingest, common);

  auto* update = app.add_subcommand("update", "Apply an update delta and flag stale states");
  update->add_option("file", file, "Update delta JSON")->required();
  add_common(update, common);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  add_common(serve, common);
  std::string listen;
  serve->add_option("--listen", listen, "host:port (overrides config)");

  auto* doc = app.add_subcommand("doc", "Visualization documents");
  doc->require_subcommand(1);
  std::string doc_name;
  std::vector<std::string> doc_datasets;
  auto* doc_create = doc->add_subcommand("create", "Create a document from datasets");
  doc_create->add_option("--name", doc_name)->required();
  doc_create->add_option("--dataset", doc_datasets, "Dataset id (repeatable)");
  add_common(doc_create, common);
  auto* doc_list = doc->add_subcommand("list", "List documents");
  add_common(doc_list, common);
  std::string flag_doc, flag_state;
  bool unflag = false;
  auto* doc_flag = doc->add_subcommand("flag", "Mark a state for the final report");
  doc_flag->add_option("--doc", flag_doc, "Document id")->required();
  doc_flag->add_option("--state", flag_state, "State id")->required();
  doc_flag->add_flag("--unflag", unflag, "Remove the mark instead");
  add_common(doc_flag, common);

  auto* report = app.add_subcommand("report", "Final reports");
  report->require_subcommand(1);
  std::string doc_id, out, title = "Report", sections_file, format = "html", in_file, report_id;
  std::vector<std::string> states;
  auto* build = report->add_subcommand("build", "Build a report from flagged states");
  build->add_option("--doc", doc_id, "Document id")->required();
  build->add_option("--out", out, "Output file (default stdout)");
  build->add_option("--title", title);
  build->add_option("--state", states, "State id, optionally 'id:description' (repeatable; default all flagged)");
  build->add_option("--sections", sections_file, "JSON array of {stateId, description}");
  add_common(build, common);
  auto* export_cmd = report->add_subcommand("export", "Export a report");
  export_cmd->add_option("--format", format, "json or html");
  export_cmd->add_option("--in", in_file, "Report JSON file");
  export_cmd->add_option("--report", report_id, "Stored report id");
  export_cmd->add_option("--out", out, "Output file (default stdout)");
  add_common(export_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const ServiceConfig cfg = resolve(common);
    const UserId user(common.user);

    if (*ingest) {
      auto ws = open_case(cfg);
      const Dataset d = ws->dataset(ws->load_dataset(read_json(file)));
      emit(json{{"datasetId", d.id.str()}, {"version", d.version}, {"objects", d.objects.size()},
                {"relationships", d.relationships.size()}}
               .dump(2),
           "");
    } else if (*update) {
      auto ws = open_case(cfg);
      emit(to_json(ws->apply_update(read_json(file))).dump(2), "");
    } else if (*serve) {
      ServiceConfig scfg = cfg;
      if (!listen.empty()) scfg.listen_address = listen;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      auto svc = start_service(scfg);
      for (const auto& w : svc->api().warnings()) std::cerr << "warning: " << w.file << ": " << w.message << "\n";
      std::cerr << "casegraph listening on " << scfg.host() << ":" << svc->port() << " (data root "
                << scfg.data_root.string() << ", case " << scfg.case_id << ")\n";
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      svc->stop();
    } else if (*doc_create) {
      auto ws = open_case(cfg);
      std::vector<DatasetId> ids(doc_datasets.begin(), doc_datasets.end());
      const DocumentId id = ws->create_document(doc_name, ids, user);
      const StateId root = ws->read(id, [](const Document& d) { return d.root(); });
      emit(json{{"documentId", id.str()}, {"rootStateId", root.str()}}.dump(2), "");
    } else if (*doc_list) {
      auto ws = open_case(cfg);
      json list = json::array();
      for (const auto& id : ws->document_ids()) {
        list.push_back(ws->read(id, [](const Document& d) {
          return json{{"id", d.id().str()}, {"name", d.meta().name}, {"states", d.state_ids().size()}};
        }));
      }
      emit(list.dump(2), "");
    } else if (*doc_flag) {
      auto ws = open_case(cfg);
      ws->write(DocumentId(flag_doc), [&](Document& d) { d.mark_for_report(StateId(flag_state), !unflag, user); });
      emit(json{{"stateId", flag_state}, {"reportFlag", !unflag}}.dump(2), "");
    } else if (*build) {
      auto ws = open_case(cfg);
      const DocumentId id(doc_id);
      std::vector<std::pair<StateId, std::string>> sections;
      if (!sections_file.empty()) {
        const json arr = read_json(sections_file);
        require_array(arr, "sections");
        for (const auto& s : arr) {
          sections.emplace_back(StateId(require_string(s, "stateId", "sections")), optional_string(s, "description", "sections"));
        }
      }
      for (const auto& s : states) {
        const auto colon = s.find(':');
        sections.emplace_back(StateId(s.substr(0, colon)), colon == std::string::npos ? "" : s.substr(colon + 1));
      }
      if (sections.empty()) {
        for (const auto& s : ws->read(id, [](const Document& d) { return d.report_candidates(); })) sections.emplace_back(s, "");
      }
      const ReportDocument r = ws->build_report(id, sections, title, user);
      emit(export_report(r, "json"), out);
      if (!out.empty()) std::cerr << "report " << r.id << " written to " << out << "\n";
    } else if (*export_cmd) {
      ReportDocument r;
      if (!in_file.empty()) {
        r = report_from_json(read_json(in_file));
      } else if (!report_id.empty()) {
        r = open_case(cfg)->report(ReportId(report_id));
      } else {
        r = report_from_json(json::parse(std::string(std::istreambuf_iterator<char>(std::cin), {})));
      }
      emit(export_report(r, format), out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.detail() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
