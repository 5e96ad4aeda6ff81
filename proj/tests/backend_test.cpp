#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "support.hpp"
#include "unlearn/backend.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/http_backend.hpp"
#include "unlearn/serialization.hpp"

namespace unlearn {
namespace {

using testing::rule;

ChatRequest user(std::string text) {
  ChatRequest r;
  r.messages.push_back({Role::kUser, std::move(text)});
  return r;
}

TEST(ChatRequest, Validation) {
  EXPECT_THROW(validate(ChatRequest{}), ValidationError);
  auto r = user("hi");
  r.temperature = -0.1;
  EXPECT_THROW(validate(r), ValidationError);
  r.temperature = 0.0;
  r.max_tokens = 0;
  EXPECT_THROW(validate(r), ValidationError);
}

TEST(ScriptedBackend, FirstMatchingRuleWins) {
  ScriptedBackend b({rule("2+2", "4"), rule("2+", "not this")}, "fallback");
  EXPECT_EQ(b.complete(user("What is 2+2?")), "4");
  EXPECT_EQ(b.complete(user("2+3")), "not this");
  EXPECT_EQ(b.complete(user("unrelated")), "fallback");
  EXPECT_EQ(b.calls(), 3u);
}

TEST(ScriptedBackend, AllOfIsOrderFree) {
  ScriptedBackend b({rule("CRITIC", "5", {"beta", "alpha"})}, "none");
  EXPECT_EQ(b.complete(user("alpha then CRITIC then beta")), "5");
  EXPECT_EQ(b.complete(user("beta CRITIC alpha")), "5");
  EXPECT_EQ(b.complete(user("alpha CRITIC")), "none");
}

TEST(ScriptedBackend, RegexRulesAndBadPatterns) {
  ScriptedRule r = rule(R"(\bYule\s+Ball\b)", "leak");
  r.kind = MatchKind::kRegex;
  ScriptedBackend b({r});
  EXPECT_EQ(b.complete(user("the Yule   Ball")), "leak");
  EXPECT_EQ(b.complete(user("Yuleball")), "");

  ScriptedRule bad = rule("(unclosed", "x");
  bad.kind = MatchKind::kRegex;
  EXPECT_THROW(ScriptedBackend({bad}), ValidationError);
}

TEST(ScriptedBackend, MatchesAcrossFlattenedMessages) {
  ChatRequest r;
  r.messages = {{Role::kSystem, "SYSTEM PART"}, {Role::kUser, "user part"}};
  EXPECT_EQ(flatten(r), "SYSTEM PART\nuser part");
  ScriptedBackend b({rule("PART\nuser", "joined")});
  EXPECT_EQ(b.complete(r), "joined");
}

TEST(ScriptedBackend, LatencyIsApplied) {
  ScriptedBackend b({rule("slow", "ok", {}, std::chrono::milliseconds(30))});
  const auto start = std::chrono::steady_clock::now();
  b.complete(user("slow"));
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(30));
}

TEST(ScriptedBackend, ScriptParsing) {
  const auto script = parse_scripted_script(R"({
    "fallback": "fb",
    "rules": [{"match": "a", "response": "A", "latency_ms": 5, "all_of": ["b"]},
              {"match": "^x", "match_kind": "regex", "response": "X"}]})");
  ASSERT_EQ(script.rules.size(), 2u);
  EXPECT_EQ(script.fallback, "fb");
  EXPECT_EQ(script.rules[0].latency, std::chrono::milliseconds(5));
  EXPECT_EQ(script.rules[0].all_of, std::vector<std::string>{"b"});
  EXPECT_EQ(script.rules[1].kind, MatchKind::kRegex);

  EXPECT_EQ(parse_scripted_script(R"([{"match": "a", "response": "A"}])").rules.size(), 1u);
  EXPECT_THROW(parse_scripted_script("{"), ParseError);
  EXPECT_THROW(parse_scripted_script(R"([{"match": "a", "response": "A", "match_kind": "glob"}])"),
               ParseError);
  EXPECT_THROW(parse_scripted_script(R"([{"match": "a", "response": "A", "latency_ms": -1}])"),
               ValidationError);
}

TEST(ScriptedBackend, EmbeddingsAreUnitLengthAndDeterministic) {
  ScriptedBackend b(std::vector<ScriptedRule>{});
  const auto e1 = b.embed("The cat sat");
  const auto e2 = b.embed("the  CAT sat!");
  EXPECT_EQ(e1, e2);
  EXPECT_EQ(e1.dimension(), ScriptedBackend::kEmbeddingDimension);
  double norm = 0.0;
  for (double x : e1.values) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_THROW(b.embed("  "), ValidationError);
  // Punctuation-only text still embeds.
  EXPECT_NO_THROW(b.embed("..."));
}

TEST(FaultInjectingBackend, FailsSelectedCallsOnly) {
  auto inner = testing::scripted({rule("ok", "fine")});
  FaultInjectingBackend f(inner, [](const ChatRequest& r) { return flatten(r).find("boom") != std::string::npos; });
  EXPECT_EQ(f.complete(user("ok")), "fine");
  try {
    f.complete(user("ok boom"));
    FAIL() << "expected an injected fault";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kInjected);
  }
  EXPECT_EQ(f.injected(), 1u);
  EXPECT_EQ(inner->calls(), 1u);
}

TEST(BackendRegistry, UnknownIdIsAnError) {
  BackendRegistry r;
  r.add("a", testing::scripted({}));
  EXPECT_TRUE(r.has("a"));
  EXPECT_FALSE(r.has("b"));
  try {
    r.complete("b", user("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kUnknownBackend);
  }
  EXPECT_THROW(r.add("n", nullptr), ValidationError);
}

TEST(BackendError, RetriableClassification) {
  using K = BackendError::Kind;
  EXPECT_TRUE(BackendError(K::kTransport, "x").retriable());
  EXPECT_TRUE(BackendError(K::kStatus, "x", 1, 503).retriable());
  EXPECT_TRUE(BackendError(K::kStatus, "x", 1, 429).retriable());
  EXPECT_FALSE(BackendError(K::kStatus, "x", 1, 400).retriable());
  EXPECT_FALSE(BackendError(K::kProtocol, "x").retriable());
}

TEST(HttpBackend, SplitUrl) {
  EXPECT_EQ(split_url("http://h:1/v1/chat"), (std::pair<std::string, std::string>{"http://h:1", "/v1/chat"}));
  EXPECT_EQ(split_url("http://h:1").second, "/");
  EXPECT_THROW(split_url("h:1/x"), ConfigError);
}

/// Local chat-completion server that fails the first `failures` requests
/// with `fail_status`.
class FakeProvider {
 public:
  FakeProvider(int failures, int fail_status) : failures_(failures), fail_status_(fail_status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      if (n <= failures_) {
        res.status = fail_status_;
        return;
      }
      const auto body = Json::parse(req.body);
      const std::string echo = body.at("messages").back().at("content").get<std::string>();
      res.set_content(Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + echo}}}}}}}.dump(),
                      "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"embedding":[0.6,0.8]}]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  HttpBackendConfig config() const {
    HttpBackendConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.embeddings_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/embeddings";
    c.model = "test-model";
    c.auth_value = "Bearer secret";
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::milliseconds(2000);
    return c;
  }
  int hits() const { return hits_.load(); }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  int fail_status_;
  std::atomic<int> hits_{0};
  std::string last_auth_;
};

TEST(HttpBackend, CompletesAndSendsAuth) {
  FakeProvider p(0, 500);
  HttpBackend b(p.config());
  EXPECT_EQ(b.complete(user("hello")), "echo:hello");
  EXPECT_EQ(p.last_auth(), "Bearer secret");
  EXPECT_TRUE(b.reachable());
  EXPECT_EQ(b.embed("x").values, (std::vector<double>{0.6, 0.8}));
}

TEST(HttpBackend, RetriesServerErrors) {
  FakeProvider p(2, 503);
  HttpBackend b(p.config());
  EXPECT_EQ(b.complete(user("again")), "echo:again");
  EXPECT_EQ(p.hits(), 3);
}

TEST(HttpBackend, GivesUpAfterMaxAttempts) {
  FakeProvider p(10, 500);
  auto cfg = p.config();
  cfg.max_attempts = 3;
  HttpBackend b(cfg);
  try {
    b.complete(user("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kStatus);
    EXPECT_EQ(e.status(), 500);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(p.hits(), 3);
}

TEST(HttpBackend, ClientErrorsAreTerminal) {
  FakeProvider p(10, 400);
  HttpBackend b(p.config());
  EXPECT_THROW(b.complete(user("x")), BackendError);
  EXPECT_EQ(p.hits(), 1);
}

TEST(HttpBackend, TransportFailureIsReported) {
  HttpBackendConfig c;
  c.url = "http://127.0.0.1:1/v1/chat/completions";
  c.max_attempts = 2;
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(200);
  HttpBackend b(c);
  try {
    b.complete(user("x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::kTransport);
    EXPECT_EQ(e.attempts(), 2);
  }
  EXPECT_FALSE(b.reachable());
}

}  // namespace
}  // namespace unlearn
