#include <httplib.h>

#include <thread>

#include "doctest.h"
#include "learnstory/error.hpp"
#include "learnstory/service.hpp"
#include "support.hpp"

using namespace learnstory;

namespace {

const testing::DiskFixture& disk() {
  static const auto f = testing::make_disk_fixture(testing::steven().data, testing::steven().config,
                                                   std::string(testing::kSteven));
  return *f;
}

EngineConfig service_config() {
  EngineConfig c = testing::steven().config;
  c.cache_dir = disk().cache_dir;
  return c;
}

std::string create_body(const std::string& unit = "U7") {
  return json{{"student", testing::kSteven}, {"unit", unit}}.dump();
}

// Serves on an ephemeral loopback port for the lifetime of the object.
class RunningServer {
 public:
  explicit RunningServer(ReportService& service) {
    bind_routes(server_, service);
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("service construction fails with a storage error when the cache is missing") {
  testing::TempDir empty;
  EngineConfig c;
  c.cache_dir = empty.path() / "nothing-here";
  try {
    ReportService s(c);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Storage);
  }
}

TEST_CASE("create, fetch and question a report without a transport") {
  ReportService service(service_config());
  CHECK(service.health().body.at("status") == "ok");

  const auto created = service.create_report(create_body());
  REQUIRE(created.status == 201);
  const auto id = created.body.at("id").get<std::string>();
  CHECK(id.size() == 16);
  CHECK(service.create_report(create_body()).body.at("id") == id);
  CHECK(service.report_id(testing::kSteven, "U7", BackendMode::Template, disk().input_hash) == id);

  const auto got = service.get_report(id);
  REQUIRE(got.status == 200);
  const auto doc = report_from_json(got.body);
  CHECK(doc.stages.size() == 12);
  CHECK(doc.metadata.student == testing::kSteven);
  CHECK(check_report(doc, &testing::steven().data.graph).empty());

  // A fresh service finds the stored report on disk.
  ReportService again(service_config());
  CHECK(again.get_report(id).body == got.body);

  const auto qa = service.ask(id, json{{"selection", {"S1-units/U3"}}, {"question", "Why is Unit 3 low?"}}.dump());
  REQUIRE(qa.status == 200);
  CHECK(qa.body.at("grounding").at("objectives") == json{"N1114", "N1115", "N1136"});
  CHECK(qa.body.at("schema") == kQaSchema);
}

TEST_CASE("service error statuses") {
  ReportService service(service_config());
  CHECK(service.create_report("{").status == 400);
  CHECK(service.create_report(json{{"student", testing::kSteven}}.dump()).status == 400);
  CHECK(service.create_report(create_body("U99")).status == 404);
  CHECK(service.create_report(json{{"student", "nobody"}, {"unit", "U7"}}.dump()).status == 404);
  CHECK(service.create_report(json{{"student", testing::kSteven}, {"unit", "U7"}, {"backend", "llm"}}.dump())
            .status == 400);
  CHECK(service.get_report("0123456789abcdef").status == 404);
  CHECK(service.get_report("../../etc/passwd").status == 404);

  const auto id = service.create_report(create_body()).body.at("id").get<std::string>();
  CHECK(service.ask("0123456789abcdef", json{{"selection", {"S1-units/U3"}}, {"question", "why low"}}.dump())
            .status == 404);
  const auto bad = service.ask(id, json{{"selection", {"S1-units/U3", "ghost"}}, {"question", "why low"}}.dump());
  CHECK(bad.status == 400);
  CHECK(bad.body.at("bad_ids") == json{"ghost"});
  CHECK(service.ask(id, json{{"selection", json::array()}, {"question", "why low"}}.dump()).status == 400);
  CHECK(service.ask(id, json{{"selection", {"S1-units/U3"}}}.dump()).status == 400);
  CHECK(service.ask(id, json{{"report_id", "other"}, {"selection", {"S1-units/U3"}}, {"question", "why"}}.dump())
            .status == 400);
}

TEST_CASE("llm-backed reports use the configured client and keep raw ids out of prompts") {
  ReportService service(service_config());
  auto client = std::make_shared<RecordingLlmClient>([](const std::string& p) {
    if (p.rfind("template: qa/", 0) == 0) return std::string(R"({"answer": "Start with N1114."})");
    const auto pos = p.find("draft:\n");
    return p.substr(pos + 7);
  });
  service.set_llm_client(client);
  const auto created =
      service.create_report(json{{"student", testing::kSteven}, {"unit", "U7"}, {"backend", "llm"}}.dump());
  REQUIRE(created.status == 201);
  const auto id = created.body.at("id").get<std::string>();
  CHECK(id != service.report_id(testing::kSteven, "U7", BackendMode::Template, disk().input_hash));
  const auto doc = report_from_json(service.get_report(id).body);
  CHECK(doc.metadata.backend == BackendMode::RemoteLLM);
  const auto qa = service.ask(id, json{{"selection", {"S1-units/U3"}}, {"question", "Why is Unit 3 low?"}}.dump());
  REQUIRE(qa.status == 200);
  CHECK(qa.body.at("answer") == "Start with N1114.");
  for (const auto& p : client->prompts()) CHECK(p.find(testing::kSteven) == std::string::npos);
}

TEST_CASE("HTTP endpoints") {
  ReportService service(service_config());
  RunningServer server(service);
  auto cli = server.client();

  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("status") == "ok");

  auto created = cli.Post("/reports", create_body(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Content-Type") == "application/json");
  const auto id = json::parse(created->body).at("id").get<std::string>();

  auto first = cli.Get("/reports/" + id);
  auto second = cli.Get("/reports/" + id);
  REQUIRE(first);
  REQUIRE(second);
  CHECK(first->status == 200);
  CHECK(first->body == second->body);
  const auto doc = report_from_json(json::parse(first->body));
  CHECK(to_json(doc) == json::parse(first->body));

  auto qa = cli.Post("/reports/" + id + "/qa",
                     json{{"selection", {"S9-mastery/S1102"}}, {"question", "Why do you suggest this?"}}.dump(),
                     "application/json");
  REQUIRE(qa);
  CHECK(qa->status == 200);
  const auto answer = qa_response_from_json(json::parse(qa->body));
  CHECK(answer.grounding.intent == Intent::ExplainSuggestion);
  CHECK(answer.grounding.objectives == ObjectiveSet{"S1102"});

  auto missing = cli.Get("/reports/ffffffffffffffff");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto bad = cli.Post("/reports/" + id + "/qa", json{{"selection", {"nope"}}, {"question", "why"}}.dump(),
                      "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).at("bad_ids") == json{"nope"});
  auto unknown_qa = cli.Post("/reports/ffffffffffffffff/qa", json{{"selection", {"x"}}, {"question", "why"}}.dump(),
                             "application/json");
  REQUIRE(unknown_qa);
  CHECK(unknown_qa->status == 404);
}
