#include "unlearn/gateway.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/http_backend.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/random.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Json error_body(std::string_view message) { return Json{{"error", message}}; }

ApiResult error(int status, std::string_view message) { return {status, error_body(message)}; }

// Resolves relative "rules" paths of scripted backends.
Json resolve_backend_paths(Json backends, const std::filesystem::path& base) {
  for (auto& [id, spec] : backends.items()) {
    if (spec.contains("rules") && spec.at("rules").is_string()) {
      spec["rules"] = resolve(base, spec.at("rules").get<std::string>()).string();
    }
  }
  return backends;
}

std::shared_ptr<ChatBackend> make_backend(const std::string& id, const Json& spec) {
  const auto type = spec.value("type", std::string{});
  if (type == "scripted") {
    ScriptedScript script;
    if (!spec.contains("rules")) throw ConfigError("scripted backend '" + id + "' has no rules");
    const Json& rules = spec.at("rules");
    if (rules.is_string()) {
      script = load_scripted_script(rules.get<std::string>());
    } else {
      script = parse_scripted_script(rules.dump());
    }
    if (spec.contains("fallback")) script.fallback = spec.at("fallback").get<std::string>();
    return std::make_shared<ScriptedBackend>(std::move(script));
  }
  if (type == "http") {
    HttpBackendConfig c;
    c.url = spec.at("url").get<std::string>();
    c.embeddings_url = spec.value("embeddings_url", std::string{});
    c.model = spec.value("model", std::string{});
    c.auth_header = spec.value("auth_header", c.auth_header);
    c.auth_value = spec.value("auth_value", std::string{});
    if (spec.contains("auth_env")) {
      const auto var = spec.at("auth_env").get<std::string>();
      if (const char* v = std::getenv(var.c_str())) c.auth_value = std::string("Bearer ") + v;
    }
    c.timeout = std::chrono::milliseconds(spec.value("timeout_ms", c.timeout.count()));
    c.max_attempts = spec.value("max_attempts", c.max_attempts);
    return std::make_shared<HttpBackend>(std::move(c));
  }
  throw ConfigError("backend '" + id + "' has unknown type '" + type + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ServiceConfig parse_service_config(std::string_view json_text, const std::filesystem::path& base) {
  ServiceConfig c;
  try {
    const Json j = Json::parse(json_text);
    if (j.contains("listen")) {
      const auto& l = j.at("listen");
      c.host = l.value("host", c.host);
      c.port = l.value("port", c.port);
    }
    c.admin_token = j.value("admin_token", std::string{});
    if (j.contains("store_path")) c.store_path = resolve(base, j.at("store_path").get<std::string>());
    if (j.contains("trace_path")) c.trace_path = resolve(base, j.at("trace_path").get<std::string>());
    c.trace_max_bytes = j.value("trace_max_bytes", c.trace_max_bytes);
    c.trace_max_files = j.value("trace_max_files", c.trace_max_files);
    if (j.contains("prompt_dir")) c.prompt_dir = resolve(base, j.at("prompt_dir").get<std::string>());
    if (j.contains("icul_pool")) c.icul_pool = resolve(base, j.at("icul_pool").get<std::string>());
    c.backends = resolve_backend_paths(j.value("backends", Json::object()), base);
    if (j.contains("pipeline")) c.pipeline = j.at("pipeline").get<PipelineConfig>();
    c.max_concurrent_requests = j.value("max_concurrent_requests", c.max_concurrent_requests);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("service config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("service config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw ConfigError("service config: port out of range");
  if (c.trace_max_files < 1) throw ConfigError("service config: trace_max_files must be >= 1");
  if (c.max_concurrent_requests < 1) {
    throw ConfigError("service config: max_concurrent_requests must be >= 1");
  }
  if (!c.backends.is_object()) throw ConfigError("service config: backends must be an object");
  for (Agent a : kAllAgents) {
    if (!c.backends.contains(c.pipeline.backend_for(a))) {
      throw ConfigError("service config: agent " + std::string(to_string(a)) +
                        " routes to undefined backend '" + c.pipeline.backend_for(a) + "'");
    }
  }
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  return parse_service_config(read_text(path), path.parent_path());
}

Json redacted(const ServiceConfig& c) {
  Json backends = c.backends;
  for (auto& [id, spec] : backends.items()) {
    if (spec.contains("auth_value")) spec["auth_value"] = "***";
  }
  Json j = {{"listen", {{"host", c.host}, {"port", c.port}}},
            {"admin_token", c.admin_token.empty() ? "" : "***"},
            {"trace_max_bytes", c.trace_max_bytes},
            {"trace_max_files", c.trace_max_files},
            {"backends", backends},
            {"pipeline", c.pipeline},
            {"max_concurrent_requests", c.max_concurrent_requests}};
  if (c.store_path) j["store_path"] = c.store_path->string();
  if (c.trace_path) j["trace_path"] = c.trace_path->string();
  if (c.prompt_dir) j["prompt_dir"] = c.prompt_dir->string();
  if (c.icul_pool) j["icul_pool"] = c.icul_pool->string();
  return j;
}

std::shared_ptr<BackendRegistry> build_backends(const ServiceConfig& config) {
  auto registry = std::make_shared<BackendRegistry>();
  try {
    for (const auto& [id, spec] : config.backends.items()) {
      registry->add(id, make_backend(id, spec));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("backend spec: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("backend spec: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("backend spec: ") + e.what());
  }
  return registry;
}

TraceLog::TraceLog(std::filesystem::path path, std::uintmax_t max_bytes, int max_files)
    : path_(std::move(path)), max_bytes_(max_bytes), max_files_(max_files) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void TraceLog::rotate() {
  auto numbered = [&](int n) {
    auto p = path_;
    p += "." + std::to_string(n);
    return p;
  };
  std::error_code ec;
  std::filesystem::remove(numbered(max_files_), ec);
  for (int n = max_files_ - 1; n >= 1; --n) {
    if (std::filesystem::exists(numbered(n))) std::filesystem::rename(numbered(n), numbered(n + 1));
  }
  std::filesystem::rename(path_, numbered(1), ec);
}

void TraceLog::append(const Json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mutex_);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path_, ec);
  if (!ec && size > 0 && size + line.size() > max_bytes_) rotate();
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << line;
}

Service::Service(const ServiceConfig& config)
    : Service(config, build_backends(config),
              config.store_path ? std::make_shared<ForgetStore>(*config.store_path)
                                : std::make_shared<ForgetStore>()) {}

Service::Service(const ServiceConfig& config, std::shared_ptr<BackendRegistry> backends,
                 std::shared_ptr<ForgetStore> store)
    : config_(config),
      backends_(std::move(backends)),
      store_(std::move(store)),
      trace_salt_(std::random_device{}()) {
  PromptSet prompts = config_.prompt_dir ? PromptSet::load_dir(*config_.prompt_dir)
                                         : PromptSet::defaults();
  std::vector<IculExample> pool;
  if (config_.icul_pool) pool = load_icul_pool(*config_.icul_pool);
  runner_ = std::make_unique<MethodRunner>(*backends_, config_.pipeline, std::move(prompts),
                                           std::move(pool));
  if (config_.trace_path) {
    traces_ = std::make_unique<TraceLog>(*config_.trace_path, config_.trace_max_bytes,
                                         config_.trace_max_files);
  }
}

bool Service::authorized(std::string_view authorization) const {
  if (config_.admin_token.empty()) return false;
  return authorization == "Bearer " + config_.admin_token;
}

std::string Service::next_trace_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tr-%016llx",
                static_cast<unsigned long long>(mix_seed(trace_salt_, trace_counter_.fetch_add(1))));
  return buf;
}

ApiResult Service::handle_chat(std::string_view body) {
  Query query;
  Method method = Method::kAlu;
  Json request;
  try {
    request = Json::parse(body);
    const auto& messages = request.at("messages");
    if (!messages.is_array() || messages.empty()) return error(400, "messages must be a non-empty array");
    std::vector<Message> all;
    for (const auto& m : messages) all.push_back(m.get<Message>());
    if (all.back().role != Role::kUser) return error(400, "last message must have role user");
    query.text = all.back().content;
    all.pop_back();
    query.history = std::move(all);
    if (request.contains("method")) {
      method = parse_method(request.at("method").get<std::string>());
      if (method == Method::kAluAblated || method == Method::kLinearReference) {
        return error(400, "method must be one of alu, guardrail, icul, vanilla");
      }
    }
    validate(query);
  } catch (const Json::exception& e) {
    return error(400, std::string("malformed body: ") + e.what());
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }

  const ForgetSnapshot snapshot = store_->snapshot();
  const std::string trace_id = next_trace_id();
  MethodAnswer answer;
  try {
    answer = runner_->answer(method, query, snapshot, trace_counter_.load());
  } catch (const std::exception& e) {
    spdlog::warn("chat {} failed: {}", trace_id, e.what());
    if (traces_) {
      traces_->append({{"trace_id", trace_id},
                       {"method", to_string(method)},
                       {"snapshot_version", snapshot.version()},
                       {"query", query},
                       {"error", e.what()}});
    }
    return error(502, std::string("backend failure: ") + e.what());
  }

  bool is_null = false;
  bool applied = false;
  if (answer.outcome) {
    is_null = answer.outcome->is_null;
    applied = !answer.outcome->trace.detected_ids.empty() || is_null;
  } else if (method == Method::kGuardrail || method == Method::kIcul) {
    applied = snapshot.size() > 0;
  }
  ApiResult result{200,
                   {{"content", answer.text},
                    {"unlearning_applied", applied},
                    {"null_response", is_null},
                    {"snapshot_version", snapshot.version()},
                    {"trace_id", trace_id}}};
  if (traces_) {
    Json record = {{"trace_id", trace_id},
                   {"method", to_string(method)},
                   {"snapshot_version", snapshot.version()},
                   {"query", query},
                   {"response", result.body}};
    if (answer.outcome) record["outcome"] = *answer.outcome;
    traces_->append(record);
  }
  return result;
}

ApiResult Service::handle_create_target(std::string_view authorization, std::string_view body) {
  if (!authorized(authorization)) return error(401, "missing or invalid admin token");
  try {
    const Json j = Json::parse(body);
    auto target = store_->add_target(j.at("name").get<std::string>(),
                                     j.value("aliases", std::vector<std::string>{}));
    return {201, {{"target", target}, {"version", store_->version()}}};
  } catch (const Json::exception& e) {
    return error(400, std::string("malformed body: ") + e.what());
  } catch (const DuplicateError& e) {
    return error(409, e.what());
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
}

ApiResult Service::handle_delete_target(std::string_view authorization, std::string_view id) {
  if (!authorized(authorization)) return error(401, "missing or invalid admin token");
  try {
    auto target = store_->remove_target(id);
    return {200, {{"target", target}, {"version", store_->version()}}};
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  }
}

ApiResult Service::handle_list_targets(std::string_view authorization) {
  if (!authorized(authorization)) return error(401, "missing or invalid admin token");
  const auto snap = store_->snapshot();
  return {200, {{"version", snap.version()}, {"targets", snap.targets()}}};
}

ApiResult Service::handle_health() {
  Json backends = Json::object();
  bool all_ok = true;
  for (const auto& id : backends_->ids()) {
    bool ok = false;
    try {
      ok = backends_->get(id)->reachable();
    } catch (const std::exception&) {
      ok = false;
    }
    backends[id] = ok;
    all_ok = all_ok && ok;
  }
  return {200,
          {{"status", all_ok ? "ok" : "degraded"},
           {"version", store_->version()},
           {"backends", backends}}};
}

ApiResult Service::handle_config() const { return {200, redacted(config_)}; }

void mount_routes(httplib::Server& server, Service& service) {
  auto reply = [](httplib::Response& res, const ApiResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Post("/v1/chat", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_chat(req.body));
  });
  server.Post("/admin/targets",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.handle_create_target(req.get_header_value("Authorization"),
                                                        req.body));
              });
  server.Delete(R"(/admin/targets/([^/]+))",
                [&service, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, service.handle_delete_target(req.get_header_value("Authorization"),
                                                          req.matches[1].str()));
                });
  server.Get("/admin/targets", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.handle_list_targets(req.get_header_value("Authorization")));
  });
  server.Get("/healthz", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.handle_health());
  });
  server.Get("/admin/config", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.handle_config());
  });
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} -> {}", req.method, req.path, res.status);
  });
}

namespace {
std::atomic<httplib::Server*> g_serving{nullptr};
extern "C" void stop_serving(int) {
  if (auto* s = g_serving.load()) s->stop();
}
}  // namespace

bool serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  const auto workers = static_cast<size_t>(service.config().max_concurrent_requests);
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  mount_routes(server, service);
  g_serving.store(&server);
  std::signal(SIGINT, stop_serving);
  std::signal(SIGTERM, stop_serving);
  spdlog::info("listening on {}:{}", host, port);
  const bool ok = server.listen(host, port);
  g_serving.store(nullptr);
  return ok;
}

}  // namespace unlearn
