#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "learnstory/config.hpp"
#include "learnstory/error.hpp"
#include "learnstory/formative.hpp"
#include "learnstory/graph.hpp"
#include "learnstory/hash.hpp"
#include "learnstory/insights.hpp"
#include "learnstory/io.hpp"
#include "learnstory/pipeline.hpp"
#include "learnstory/service.hpp"
#include "learnstory/synth.hpp"

namespace fs = std::filesystem;
using namespace learnstory;

namespace {

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string cache_dir;
};

EngineConfig load_config(const GlobalOptions& g, std::map<std::string, std::string> flags) {
  std::map<std::string, std::string> merged;
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
    merged[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!g.cache_dir.empty()) merged["cache_dir"] = g.cache_dir;
  for (auto& [k, v] : flags) merged[k] = v;

  std::optional<fs::path> file;
  if (!g.config_file.empty()) {
    file = g.config_file;
  } else if (const char* env = std::getenv("LEARNSTORY_CONFIG"); env && *env) {
    file = env;
  }
  return resolve_config(file, process_env(), merged);
}

fs::path graph_path(const std::string& flag, const EngineConfig& cfg) {
  return flag.empty() ? cfg.cache_dir / "graph.json" : fs::path(flag);
}

void emit(const json& doc, const std::string& out) {
  const auto text = doc.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

std::string now_utc() {
  return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

std::vector<std::string> cached_students(const CacheStore& store) {
  std::vector<std::string> ids;
  for (const auto& [_, v] : store.index()["entries"].items()) ids.push_back(v.value("student_id", ""));
  return ids;
}

int run_synth(std::uint64_t seed, std::size_t cohort, const std::string& scenario, const fs::path& out_dir) {
  SynthOptions opts;
  opts.seed = seed;
  opts.cohort_size = cohort;
  opts.scenario = scenario;
  const auto data = synthesize(opts);

  fs::create_directories(out_dir);
  const auto graph_text = graph_to_json(data.graph).dump(2) + "\n";
  std::ostringstream records;
  write_records(records, data.records);
  write_file_atomic(out_dir / "graph.json", graph_text);
  write_file_atomic(out_dir / "records.ndjson", records.str());

  json manifest = {{"schema", "learnstory.synth/1"},
                   {"seed", seed},
                   {"cohort_size", cohort},
                   {"scenario", scenario},
                   {"focal_student", data.focal_student},
                   {"report_unit", data.report_unit},
                   {"records", data.records.size()},
                   {"files",
                    {{"graph.json", sha256_hex(graph_text)}, {"records.ndjson", sha256_hex(records.str())}}}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cerr << "wrote " << data.records.size() << " records to " << out_dir.string() << "\n";
  return 0;
}

int run_ingest(const std::string& graph_file, const std::string& records_file, const std::string& out) {
  const auto graph = load_graph(graph_file);
  auto records = RecordStore(records_file).load(&graph);
  sort_records(records);
  std::ostringstream text;
  write_records(text, records);
  if (out.empty() || out == "-") {
    std::cout << text.str();
  } else {
    write_file_atomic(out, text.str());
  }
  std::cerr << "validated " << records.size() << " records against " << graph.objectives().size()
            << " objectives\n";
  return 0;
}

int run_aggregate(const EngineConfig& cfg, const std::string& graph_file, const std::string& records_file,
                  const std::string& student, const std::string& unit) {
  const auto graph = load_graph(graph_file);
  const auto records = RecordStore(records_file).load(&graph);
  fs::create_directories(cfg.cache_dir);
  CacheStore store(cfg.cache_dir);
  const auto summary =
      aggregate_to_cache(graph, records, cfg, store, student.empty() ? std::nullopt : std::optional(student),
                         unit.empty() ? std::nullopt : std::optional(unit));
  save_graph(graph, cfg.cache_dir / "graph.json");
  emit({{"input_hash", summary.input_hash},
        {"entries", summary.files.size()},
        {"cache_dir", cfg.cache_dir.string()}},
       "");
  return 0;
}

int run_mine(const EngineConfig& cfg, const std::string& graph_file, const std::string& student,
             const std::string& unit, const std::string& out) {
  const auto graph = load_graph(graph_path(graph_file, cfg));
  const auto entry = CacheStore(cfg.cache_dir).require(student, unit);
  const auto insights = mine_top_k(entry, graph, cfg.detector(), cfg.top_k);
  json list = json::array();
  for (const auto& i : insights) list.push_back(to_json(i));
  emit({{"schema", "learnstory.insights/1"}, {"student", student}, {"unit", unit}, {"insights", list}}, out);
  return 0;
}

int run_diagnose(const EngineConfig& cfg, const std::string& graph_file, const std::string& student,
                 const std::string& unit, const std::string& out) {
  const auto graph = load_graph(graph_path(graph_file, cfg));
  const auto entry = CacheStore(cfg.cache_dir).require(student, unit);
  const auto diagnoses = diagnose(entry, graph, cfg.formative());
  json list = json::array();
  for (const auto& d : diagnoses) list.push_back(to_json(d));
  emit({{"schema", "learnstory.diagnoses/1"}, {"student", student}, {"unit", unit}, {"diagnoses", list}}, out);
  return 0;
}

int run_report(const EngineConfig& cfg, const std::string& graph_file, const std::string& student,
               const std::string& unit, const std::string& out, const std::string& generated_at) {
  const auto graph = load_graph(graph_path(graph_file, cfg));
  CacheStore store(cfg.cache_dir);
  const auto entry = store.require(student, unit);
  auto ids = cached_students(store);
  ids.insert(ids.begin(), student);
  const auto backend = make_backend(cfg, Anonymizer(ids));
  const auto doc = generate_report(entry, graph, cfg, *backend, generated_at.empty() ? now_utc() : generated_at);
  const auto text = serialize_report(doc);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
  for (const auto& f : doc.metadata.fallbacks) {
    std::cerr << "stage " << f.stage << " fell back to template: " << f.reason << "\n";
  }
  return 0;
}

int run_serve(const EngineConfig& cfg, const std::string& graph_file, const std::string& host, int port) {
  std::unique_ptr<ReportService> service;
  try {
    service = std::make_unique<ReportService>(cfg, graph_file.empty() ? fs::path{} : fs::path(graph_file));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCacheUnreadable;
  }
  httplib::Server server;
  bind_routes(server, *service);
  if (!server.bind_to_port(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kExitPortInUse;
  }
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  return server.listen_after_bind() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learnstory: narrative learning reports from attempt records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  GlobalOptions g;
  app.add_option("-c,--config", g.config_file, "JSON config file (env LEARNSTORY_CONFIG)");
  app.add_option("--set", g.sets, "Override a config key: key=value (repeatable)");
  app.add_option("--cache-dir", g.cache_dir, "Cache directory (config key cache_dir)");

  std::uint64_t synth_seed = 7;
  std::size_t cohort = 200;
  std::string scenario = "steven";
  std::string out_dir = "data";
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic cohort");
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--cohort", cohort, "Cohort size including the focal student")->capture_default_str();
  synth->add_option("--scenario", scenario, "steven | sparse | cohort")
      ->check(CLI::IsMember({"steven", "sparse", "cohort"}))
      ->capture_default_str();
  synth->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();

  std::string graph_file, records_file, out, student, unit;
  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a records file");
  ingest->add_option("--graph", graph_file, "Objective graph JSON")->required();
  ingest->add_option("--records", records_file, "Attempt records NDJSON")->required();
  ingest->add_option("-o,--out", out, "Normalized NDJSON output (default stdout)");

  std::string interval_width, origin, cohort_scope;
  auto* aggregate = app.add_subcommand("aggregate", "Build the offline metrics cache");
  aggregate->add_option("--graph", graph_file, "Objective graph JSON")->required();
  aggregate->add_option("--records", records_file, "Attempt records NDJSON")->required();
  aggregate->add_option("--student", student, "Only this student");
  aggregate->add_option("--unit", unit, "Only this unit");
  aggregate->add_option("--interval-width-days", interval_width, "Interval width in days");
  aggregate->add_option("--origin", origin, "Interval origin (ISO-8601)");
  aggregate->add_option("--cohort-scope", cohort_scope, "all | unit");

  std::string k, seed, permutations, backend, generated_at;
  auto* mine = app.add_subcommand("mine", "Top-k summative insights as JSON");
  auto* diag = app.add_subcommand("diagnose", "Tri-level objective diagnoses as JSON");
  auto* report = app.add_subcommand("report", "Generate a report document");
  for (auto* sub : {mine, diag, report}) {
    sub->add_option("--student", student, "Student id")->required();
    sub->add_option("--unit", unit, "Unit id")->required();
    sub->add_option("--graph", graph_file, "Objective graph JSON (default <cache_dir>/graph.json)");
    sub->add_option("-o,--out", out, "Output file (default stdout)");
  }
  for (auto* sub : {mine, report}) {
    sub->add_option("--seed", seed, "Permutation-test seed");
    sub->add_option("--permutations", permutations, "Permutation count");
  }
  mine->add_option("-k,--k", k, "Number of insights");
  report->add_option("--backend", backend, "template | llm");
  report->add_option("--generated-at", generated_at, "Metadata timestamp (default now)");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the report and Q&A HTTP API");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--graph", graph_file, "Objective graph JSON (default <cache_dir>/graph.json)");
  serve->add_option("--backend", backend, "Default backend: template | llm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::map<std::string, std::string> flags;
    auto put = [&flags](const char* key, const std::string& v) {
      if (!v.empty()) flags[key] = v;
    };
    put("interval_width_days", interval_width);
    put("origin", origin);
    put("cohort_scope", cohort_scope);
    put("top_k", k);
    put("seed", seed);
    put("permutations", permutations);
    put("backend", backend);
    // Resolved for every subcommand so a bad config file fails uniformly.
    const auto cfg = load_config(g, flags);

    if (*synth) return run_synth(synth_seed, cohort, scenario, out_dir);
    if (*ingest) return run_ingest(graph_file, records_file, out);

    if (*aggregate) return run_aggregate(cfg, graph_file, records_file, student, unit);
    if (*mine) return run_mine(cfg, graph_file, student, unit, out);
    if (*diag) return run_diagnose(cfg, graph_file, student, unit, out);
    if (*report) return run_report(cfg, graph_file, student, unit, out, generated_at);
    if (*serve) return run_serve(cfg, graph_file, host, port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
