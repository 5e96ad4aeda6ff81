#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/baselines.hpp"
#include "unlearn/core.hpp"
#include "unlearn/forget_store.hpp"
#include "unlearn/methods.hpp"
#include "unlearn/serialization.hpp"

namespace httplib {
class Server;
}

namespace unlearn {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token;
  std::optional<std::filesystem::path> store_path;  // in-memory store when absent
  std::optional<std::filesystem::path> trace_path;  // no trace log when absent
  std::uintmax_t trace_max_bytes = 16u << 20;
  int trace_max_files = 3;
  std::optional<std::filesystem::path> prompt_dir;
  std::optional<std::filesystem::path> icul_pool;
  Json backends = Json::object();  // id -> backend spec, see build_backends()
  PipelineConfig pipeline;
  int max_concurrent_requests = 16;
};

// Relative paths resolve against `base_dir`. Throws ConfigError.
ServiceConfig parse_service_config(std::string_view json_text,
                                   const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);

// Effective configuration with secrets replaced by "***".
Json redacted(const ServiceConfig& config);

/// Backend specs:
///   {"type": "scripted", "rules": <path or inline script>, "fallback": text}
///   {"type": "http", "url", "embeddings_url", "model", "auth_header",
///    "auth_value" | "auth_env", "timeout_ms", "max_attempts"}
/// Every backend the pipeline routes to must be defined.
std::shared_ptr<BackendRegistry> build_backends(const ServiceConfig& config);

/// Append-only JSON-lines log. When a write would push the file past
/// `max_bytes` it is rotated to path.1 (older files shift up, the oldest
/// beyond `max_files` is dropped).
class TraceLog {
 public:
  TraceLog(std::filesystem::path path, std::uintmax_t max_bytes, int max_files);
  void append(const Json& record);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void rotate();

  std::filesystem::path path_;
  std::uintmax_t max_bytes_;
  int max_files_;
  std::mutex mutex_;
};

struct ApiResult {
  int status = 200;
  Json body;
};

/// The gateway's request handling, independent of the HTTP transport.
///
/// Each chat binds one forget-store snapshot for its whole run, so a target
/// mutation is seen by every request that starts after it returns and by
/// none that started before.
class Service {
 public:
  explicit Service(const ServiceConfig& config);
  Service(const ServiceConfig& config, std::shared_ptr<BackendRegistry> backends,
          std::shared_ptr<ForgetStore> store);

  // Body: {"messages": [{"role", "content"}...], "method": optional}.
  ApiResult handle_chat(std::string_view body);
  ApiResult handle_create_target(std::string_view authorization, std::string_view body);
  ApiResult handle_delete_target(std::string_view authorization, std::string_view id);
  ApiResult handle_list_targets(std::string_view authorization);
  ApiResult handle_health();
  ApiResult handle_config() const;

  const ServiceConfig& config() const noexcept { return config_; }
  ForgetStore& store() noexcept { return *store_; }
  const BackendRegistry& backends() const noexcept { return *backends_; }
  const TraceLog* trace_log() const noexcept { return traces_.get(); }

 private:
  bool authorized(std::string_view authorization) const;
  std::string next_trace_id();

  ServiceConfig config_;
  std::shared_ptr<BackendRegistry> backends_;
  std::shared_ptr<ForgetStore> store_;
  std::unique_ptr<MethodRunner> runner_;
  std::unique_ptr<TraceLog> traces_;
  std::atomic<std::uint64_t> trace_counter_{0};
  std::uint64_t trace_salt_;
};

/// Routes the gateway endpoints onto `server`:
/// POST /v1/chat, POST /admin/targets, DELETE /admin/targets/{id},
/// GET /admin/targets, GET /healthz, GET /admin/config.
void mount_routes(httplib::Server& server, Service& service);

// Blocks until SIGINT/SIGTERM. Returns false if the address cannot be bound.
bool serve(Service& service, const std::string& host, int port);

}  // namespace unlearn
