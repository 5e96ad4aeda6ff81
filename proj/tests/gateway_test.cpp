#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

#include "support.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/gateway.hpp"

namespace unlearn {
namespace {

using testing::rule;

constexpr const char* kAdmin = "Bearer s3cret";

ServiceConfig base_config() {
  ServiceConfig c;
  c.admin_token = "s3cret";
  c.backends = {{"default", {{"type", "scripted"}, {"rules", Json{{"rules", Json::array()}}}}}};
  return c;
}

std::unique_ptr<Service> service_with(std::vector<ScriptedRule> rules,
                                      ServiceConfig config = base_config()) {
  auto reg = std::make_shared<BackendRegistry>(testing::registry_with(testing::scripted(std::move(rules))));
  return std::make_unique<Service>(config, reg, std::make_shared<ForgetStore>());
}

std::string chat_body(const std::string& text, const std::string& method = "") {
  Json j = {{"messages", {{{"role", "user"}, {"content", text}}}}};
  if (!method.empty()) j["method"] = method;
  return j.dump();
}

TEST(ServiceConfig, ParsesAndValidatesRoutes) {
  const auto c = parse_service_config(
      R"({"listen": {"port": 9000}, "admin_token": "x", "store_path": "s.json",
          "backends": {"default": {"type": "scripted", "rules": "r.json"}}})",
      "/base");
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(*c.store_path, std::filesystem::path("/base/s.json"));
  EXPECT_EQ(c.backends["default"]["rules"], "/base/r.json");
  EXPECT_THROW(parse_service_config(R"({"backends": {}})"), ConfigError);
  EXPECT_THROW(parse_service_config(
                   R"({"backends": {"default": {"type": "scripted"}},
                       "pipeline": {"backend_routes": {"critic": "judge"}}})"),
               ConfigError);
  EXPECT_THROW(parse_service_config(R"({"listen": {"port": 70000},
                                        "backends": {"default": {}}})"),
               ConfigError);
}

TEST(ServiceConfig, RedactsSecrets) {
  auto c = base_config();
  c.backends["remote"] = {{"type", "http"}, {"url", "http://x"}, {"auth_value", "Bearer key"}};
  const auto j = redacted(c);
  EXPECT_EQ(j["admin_token"], "***");
  EXPECT_EQ(j["backends"]["remote"]["auth_value"], "***");
  EXPECT_EQ(j.dump().find("s3cret"), std::string::npos);
  EXPECT_EQ(j.dump().find("key"), std::string::npos);
}

TEST(BuildBackends, UnknownTypeIsConfigError) {
  auto c = base_config();
  c.backends["odd"] = {{"type", "telepathy"}};
  EXPECT_THROW(build_backends(c), ConfigError);
  EXPECT_EQ(build_backends(base_config())->ids(), (std::vector<std::string>{"default"}));
}

TEST(Service, AdminEndpointsRequireToken) {
  auto svc = service_with({});
  EXPECT_EQ(svc->handle_create_target("", R"({"name": "A B"})").status, 401);
  EXPECT_EQ(svc->handle_create_target("Bearer wrong", R"({"name": "A B"})").status, 401);
  EXPECT_EQ(svc->handle_delete_target("", "t1").status, 401);
  EXPECT_EQ(svc->handle_list_targets("").status, 401);

  auto open = base_config();
  open.admin_token.clear();
  auto locked = service_with({}, open);
  EXPECT_EQ(locked->handle_list_targets("Bearer ").status, 401);
}

TEST(Service, TargetLifecycleStatuses) {
  auto svc = service_with({});
  auto created = svc->handle_create_target(kAdmin, R"({"name": "Hermione Granger", "aliases": ["Hermione"]})");
  EXPECT_EQ(created.status, 201);
  EXPECT_EQ(created.body["version"], 1);
  const auto id = created.body["target"]["id"].get<std::string>();
  EXPECT_EQ(svc->handle_create_target(kAdmin, R"({"name": "hermione granger"})").status, 409);
  EXPECT_EQ(svc->handle_create_target(kAdmin, R"({"name": "  "})").status, 400);
  EXPECT_EQ(svc->handle_create_target(kAdmin, "{oops").status, 400);
  EXPECT_EQ(svc->handle_create_target(kAdmin, R"({"nom": "x"})").status, 400);

  const auto listed = svc->handle_list_targets(kAdmin);
  EXPECT_EQ(listed.status, 200);
  EXPECT_EQ(listed.body["targets"].size(), 1u);

  EXPECT_EQ(svc->handle_delete_target(kAdmin, id).status, 200);
  EXPECT_EQ(svc->handle_delete_target(kAdmin, id).status, 404);
  EXPECT_EQ(svc->handle_list_targets(kAdmin).body["version"], 2);
}

TEST(Service, ChatValidation) {
  auto svc = service_with({});
  EXPECT_EQ(svc->handle_chat("nope").status, 400);
  EXPECT_EQ(svc->handle_chat(R"({"messages": []})").status, 400);
  EXPECT_EQ(svc->handle_chat(R"({"messages": [{"role": "assistant", "content": "x"}]})").status, 400);
  EXPECT_EQ(svc->handle_chat(chat_body("   ")).status, 400);
  EXPECT_EQ(svc->handle_chat(chat_body("q", "magic")).status, 400);
  EXPECT_EQ(svc->handle_chat(chat_body("q", "alu_ablated")).status, 400);
}

TEST(Service, ChatReportsUnlearningApplied) {
  auto stack = testing::single_target_stack("Hermione Granger", {5, 5, 4, 5, 5});
  stack.vanilla = "Hermione Granger went with Krum.";
  auto svc = service_with(testing::rules_for(stack));
  svc->handle_create_target(kAdmin, R"({"name": "Hermione Granger"})");

  const auto hit = svc->handle_chat(chat_body("What happened at the Yule Ball?"));
  EXPECT_EQ(hit.status, 200);
  EXPECT_EQ(hit.body["content"], "A composed answer.");
  EXPECT_TRUE(hit.body["unlearning_applied"].get<bool>());
  EXPECT_FALSE(hit.body["null_response"].get<bool>());
  EXPECT_EQ(hit.body["snapshot_version"], 1);
  EXPECT_EQ(hit.body["trace_id"].get<std::string>().rfind("tr-", 0), 0u);

  auto plain = testing::Stack{};
  plain.vanilla = "Paris.";
  plain.detect = "None";
  auto svc2 = service_with(testing::rules_for(plain));
  svc2->handle_create_target(kAdmin, R"({"name": "Hermione Granger"})");
  const auto miss = svc2->handle_chat(chat_body("Capital of France?"));
  EXPECT_EQ(miss.body["content"], "Paris.");
  EXPECT_FALSE(miss.body["unlearning_applied"].get<bool>());
}

TEST(Service, BaselineBackendFailureIs502) {
  auto cfg = base_config();
  auto svc = std::make_unique<Service>(cfg, std::make_shared<BackendRegistry>(),
                                       std::make_shared<ForgetStore>());
  EXPECT_EQ(svc->handle_chat(chat_body("q", "guardrail")).status, 502);
}

TEST(Service, HealthAndConfig) {
  auto svc = service_with({});
  const auto h = svc->handle_health();
  EXPECT_EQ(h.status, 200);
  EXPECT_EQ(h.body["status"], "ok");
  EXPECT_EQ(h.body["version"], 0);
  EXPECT_EQ(svc->handle_config().body["admin_token"], "***");
}

TEST(Service, WritesTraceRecords) {
  testing::TempDir dir;
  auto cfg = base_config();
  cfg.trace_path = dir / "traces.jsonl";
  auto plain = testing::Stack{};
  plain.vanilla = "Paris.";
  plain.detect = "None";
  auto svc = service_with(testing::rules_for(plain), cfg);
  const auto r = svc->handle_chat(chat_body("Capital?"));
  std::ifstream in(dir / "traces.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const auto rec = Json::parse(line);
  EXPECT_EQ(rec["trace_id"], r.body["trace_id"]);
  EXPECT_TRUE(rec.contains("outcome"));
}

TEST(TraceLog, RotatesAndDropsOldest) {
  testing::TempDir dir;
  TraceLog log(dir / "t.jsonl", 40, 2);
  // Records are 8 or 9 bytes, so 20 of them rotate at least three times.
  for (int i = 0; i < 20; ++i) log.append({{"n", i}});
  EXPECT_TRUE(std::filesystem::exists(dir / "t.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "t.jsonl.1"));
  EXPECT_TRUE(std::filesystem::exists(dir / "t.jsonl.2"));
  EXPECT_FALSE(std::filesystem::exists(dir / "t.jsonl.3"));
  EXPECT_LE(std::filesystem::file_size(dir / "t.jsonl"), 40u);
  std::ifstream in(dir / "t.jsonl");
  std::string last, line;
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(Json::parse(last)["n"], 19);
}

class HttpGateway : public ::testing::Test {
 protected:
  void SetUp() override {
    auto stack = testing::single_target_stack("Hermione Granger", {5, 5, 4, 5, 5});
    service_ = service_with(testing::rules_for(stack));
    mount_routes(server_, *service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Client client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

  std::unique_ptr<Service> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(HttpGateway, RoundTrip) {
  auto c = client();
  const httplib::Headers auth = {{"Authorization", kAdmin}};
  auto created = c.Post("/admin/targets", auth, R"({"name": "Hermione Granger"})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const auto id = Json::parse(created->body)["target"]["id"].get<std::string>();

  auto chat = c.Post("/v1/chat", chat_body("Yule Ball?"), "application/json");
  ASSERT_TRUE(chat);
  EXPECT_EQ(chat->status, 200);
  EXPECT_EQ(Json::parse(chat->body)["snapshot_version"], 1);

  auto listed = c.Get("/admin/targets", auth);
  ASSERT_TRUE(listed);
  EXPECT_EQ(Json::parse(listed->body)["targets"].size(), 1u);

  auto removed = c.Delete("/admin/targets/" + id, auth);
  ASSERT_TRUE(removed);
  EXPECT_EQ(removed->status, 200);
  auto missing = c.Delete("/admin/targets/" + id, auth);
  EXPECT_EQ(missing->status, 404);

  auto health = c.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(Json::parse(health->body)["version"], 2);
  EXPECT_EQ(c.Get("/admin/config")->status, 200);
  EXPECT_EQ(c.Post("/v1/chat", "{", "application/json")->status, 400);
}

}  // namespace
}  // namespace unlearn
