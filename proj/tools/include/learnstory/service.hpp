#pragma once

// Report and Q&A service. Transport-free core plus an httplib binding.

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "json.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/config.hpp"
#include "learnstory/llm.hpp"
#include "learnstory/qa.hpp"
#include "learnstory/story.hpp"

namespace httplib {
class Server;
}

namespace learnstory {

using nlohmann::json;

struct ServiceResponse {
  int status = 200;
  json body = json::object();
};

// Startup failures that the serve subcommand maps onto its own exit codes.
inline constexpr int kExitCacheUnreadable = 5;
inline constexpr int kExitPortInUse = 6;

class ReportService {
 public:
  // Reads the cache index and the graph copy stored beside it. Throws
  // ErrorKind::Storage when either is missing or unreadable.
  explicit ReportService(EngineConfig config, std::filesystem::path graph_path = {});

  // Overrides the language-model client used for backend "llm" (tests).
  void set_llm_client(std::shared_ptr<const LlmClient> client);

  ServiceResponse health() const;
  ServiceResponse create_report(const std::string& body);
  ServiceResponse get_report(const std::string& id) const;
  ServiceResponse ask(const std::string& id, const std::string& body) const;

  // Deterministic id over the request and every input that shapes the report.
  std::string report_id(const std::string& student, const std::string& unit, BackendMode backend,
                        const std::string& input_hash) const;

  const EngineConfig& config() const { return config_; }

 private:
  std::shared_ptr<const ReportDocument> find(const std::string& id) const;
  std::shared_ptr<const CacheEntry> entry_for(const std::string& id, const ReportDocument& doc) const;
  Anonymizer anonymizer_for(const std::string& student) const;
  std::shared_ptr<const LlmClient> llm_client() const;

  EngineConfig config_;
  CacheStore store_;
  ObjectiveGraph graph_;
  std::filesystem::path reports_dir_;
  std::shared_ptr<const LlmClient> llm_override_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const ReportDocument>> reports_;
  mutable std::map<std::string, std::shared_ptr<const CacheEntry>> entries_;  // by report id
};

// Registers every route on `server`.
void bind_routes(httplib::Server& server, ReportService& service);

}  // namespace learnstory
