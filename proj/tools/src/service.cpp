#include "learnstory/service.hpp"

#include <chrono>

#include "httplib.h"
#include "learnstory/error.hpp"
#include "learnstory/hash.hpp"
#include "learnstory/io.hpp"
#include "learnstory/pipeline.hpp"

namespace learnstory {

namespace {

ServiceResponse error_response(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Data: return 400;
    case ErrorKind::Storage:
    case ErrorKind::Runtime: return 500;
  }
  return 500;
}

json parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::Data, "request body must be a JSON object");
  return j;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty())
    fail(ErrorKind::Data, std::string("'") + key + "' must be a non-empty string");
  return it->get<std::string>();
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string now_utc() {
  return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

}  // namespace

ReportService::ReportService(EngineConfig config, std::filesystem::path graph_path)
    : config_(std::move(config)), store_(config_.cache_dir), reports_dir_(config_.cache_dir / "reports") {
  if (!std::filesystem::is_directory(config_.cache_dir))
    fail(ErrorKind::Storage, "cache directory not found: " + config_.cache_dir.string());
  store_.index();
  if (graph_path.empty()) graph_path = config_.cache_dir / "graph.json";
  try {
    graph_ = load_graph(graph_path);
  } catch (const Error& e) {
    fail(ErrorKind::Storage, std::string("cannot load graph: ") + e.what());
  }
}

void ReportService::set_llm_client(std::shared_ptr<const LlmClient> client) {
  llm_override_ = std::move(client);
}

std::shared_ptr<const LlmClient> ReportService::llm_client() const {
  if (llm_override_) return llm_override_;
  if (config_.llm_endpoint.empty()) return nullptr;
  return std::make_shared<HttpLlmClient>(
      LlmEndpoint{config_.llm_endpoint, config_.llm_api_key, config_.llm_model, 30});
}

Anonymizer ReportService::anonymizer_for(const std::string& student) const {
  std::vector<std::string> ids{student};
  for (const auto& [_, v] : store_.index()["entries"].items()) ids.push_back(v.value("student_id", ""));
  return Anonymizer(ids);
}

ServiceResponse ReportService::health() const { return {200, {{"status", "ok"}}}; }

std::string ReportService::report_id(const std::string& student, const std::string& unit, BackendMode backend,
                                     const std::string& input_hash) const {
  const auto key = student + "|" + unit + "|" + std::string(to_string(backend)) + "|" + input_hash + "|" +
                   config_.to_json().dump();
  return sha256_hex(key).substr(0, 16);
}

ServiceResponse ReportService::create_report(const std::string& body) {
  try {
    const auto req = parse_body(body);
    const auto student = required_string(req, "student");
    const auto unit = required_string(req, "unit");
    auto cfg = config_;
    if (auto b = req.find("backend"); b != req.end()) {
      if (!b->is_string()) fail(ErrorKind::Data, "'backend' must be a string");
      cfg.backend = parse_backend_mode(b->get<std::string>());
    }
    if (!graph_.find_unit(unit)) return error_response(404, "unknown unit '" + unit + "'");
    auto entry = store_.read(student, unit);
    if (!entry) return error_response(404, "no cached metrics for " + student + "/" + unit + "; run aggregate first");

    const auto id = report_id(student, unit, cfg.backend, entry->input_hash);
    if (find(id)) return {201, {{"id", id}}};

    std::unique_ptr<NarrativeBackend> backend;
    if (cfg.backend == BackendMode::RemoteLLM) {
      auto client = llm_client();
      if (!client) return error_response(400, "backend 'llm' needs llm_endpoint");
      backend = std::make_unique<LlmNarrativeBackend>(client, anonymizer_for(student), cfg.llm_max_in_flight);
    } else {
      backend = std::make_unique<TemplateBackend>();
    }
    auto doc = std::make_shared<const ReportDocument>(generate_report(*entry, graph_, cfg, *backend, now_utc()));
    std::filesystem::create_directories(reports_dir_);
    write_file_atomic(reports_dir_ / (id + ".json"), serialize_report(*doc));

    std::unique_lock lock(mutex_);
    reports_.emplace(id, std::move(doc));
    entries_.emplace(id, std::make_shared<const CacheEntry>(std::move(*entry)));
    return {201, {{"id", id}}};
  } catch (const Error& e) {
    return error_response(status_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

std::shared_ptr<const ReportDocument> ReportService::find(const std::string& id) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = reports_.find(id); it != reports_.end()) return it->second;
  }
  if (!valid_id(id)) return nullptr;
  const auto path = reports_dir_ / (id + ".json");
  if (!std::filesystem::exists(path)) return nullptr;
  auto doc = std::make_shared<const ReportDocument>(report_from_json(json::parse(read_file(path))));
  std::unique_lock lock(mutex_);
  return reports_.emplace(id, std::move(doc)).first->second;
}

std::shared_ptr<const CacheEntry> ReportService::entry_for(const std::string& id, const ReportDocument& doc) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) return it->second;
  }
  auto entry = store_.read(doc.metadata.student, doc.metadata.unit);
  if (!entry) return nullptr;
  auto ptr = std::make_shared<const CacheEntry>(std::move(*entry));
  std::unique_lock lock(mutex_);
  return entries_.emplace(id, std::move(ptr)).first->second;
}

ServiceResponse ReportService::get_report(const std::string& id) const {
  try {
    auto doc = find(id);
    if (!doc) return error_response(404, "unknown report '" + id + "'");
    return {200, to_json(*doc)};
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

ServiceResponse ReportService::ask(const std::string& id, const std::string& body) const {
  try {
    auto doc = find(id);
    if (!doc) return error_response(404, "unknown report '" + id + "'");
    auto entry = entry_for(id, *doc);
    if (!entry) return error_response(404, "cache entry for this report is gone; run aggregate first");

    auto request = qa_request_from_json(parse_body(body));
    if (request.report_id.empty()) request.report_id = id;
    if (request.report_id != id) return error_response(400, "report_id does not match the URL");

    QAContext ctx;
    ctx.report = doc.get();
    ctx.entry = entry.get();
    ctx.graph = &graph_;
    ctx.formative = config_.formative();
    ctx.pedagogy = config_.pedagogy();
    if (doc->metadata.backend == BackendMode::RemoteLLM) {
      ctx.llm = llm_client();
      ctx.anonymizer = anonymizer_for(doc->metadata.student);
    }
    return {200, to_json(learnstory::answer(request, ctx))};
  } catch (const ResolutionError& e) {
    return error_response(400, e.what(), {{"bad_ids", e.bad_ids()}});
  } catch (const Error& e) {
    return error_response(status_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

void bind_routes(httplib::Server& server, ReportService& service) {
  // The library default adds SO_REUSEPORT, which would let a second server
  // share a busy port instead of failing at startup.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/healthz", [&service, send](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  server.Post("/reports", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.create_report(req.body));
  });
  server.Get(R"(/reports/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_report(req.matches[1]));
  });
  server.Post(R"(/reports/([^/]+)/qa)", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.ask(req.matches[1], req.body));
  });
}

}  // namespace learnstory
