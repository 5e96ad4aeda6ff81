#pragma once

#include <chrono>
#include <string>

#include "unlearn/backend.hpp"

namespace unlearn {

struct HttpBackendConfig {
  // Full chat-completion endpoint, e.g. http://127.0.0.1:8000/v1/chat/completions.
  std::string url;
  // Embedding endpoint; empty disables embed().
  std::string embeddings_url;
  std::string model;
  std::string auth_header = "Authorization";
  std::string auth_value;
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
};

/// Chat backend speaking the JSON chat-completion wire format:
/// POST {model, messages:[{role, content}], temperature, max_tokens} and read
/// choices[0].message.content. Transport errors, 429 and 5xx are retried with
/// exponential backoff; other non-2xx statuses fail immediately.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string complete(const ChatRequest& request) override;
  EmbeddingVector embed(std::string_view text) override;
  bool reachable() override;
  std::string kind() const override { return "http"; }

  const HttpBackendConfig& config() const noexcept { return config_; }

 private:
  std::string post_with_retry(const std::string& url, const std::string& body);

  HttpBackendConfig config_;
};

// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace unlearn
