#include "unlearn/http_backend.hpp"

#include <httplib.h>

#include <thread>

#include "unlearn/errors.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("url '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw ConfigError("http backend needs a url");
  split_url(config_.url);
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

std::string HttpBackend::post_with_retry(const std::string& url, const std::string& body) {
  const auto [base, path] = split_url(url);
  httplib::Headers headers;
  if (!config_.auth_value.empty()) headers.emplace(config_.auth_header, config_.auth_value);

  auto backoff = config_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(path, headers, body, "application/json");

    std::optional<BackendError> error;
    if (!res) {
      error.emplace(BackendError::Kind::kTransport,
                    "transport failure contacting " + base + ": " + httplib::to_string(res.error()),
                    attempt);
    } else if (res->status < 200 || res->status >= 300) {
      error.emplace(BackendError::Kind::kStatus,
                    "backend " + base + path + " returned HTTP " + std::to_string(res->status),
                    attempt, res->status);
    } else {
      return res->body;
    }
    if (!error->retriable() || attempt >= config_.max_attempts) throw *error;
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

std::string HttpBackend::complete(const ChatRequest& request) {
  validate(request);
  Json body{{"model", request.model_id.empty() ? config_.model : request.model_id},
            {"messages", request.messages},
            {"temperature", request.temperature}};
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

  const std::string raw = post_with_retry(config_.url, body.dump());
  try {
    const auto doc = Json::parse(raw);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw BackendError(BackendError::Kind::kProtocol,
                       std::string("malformed chat completion response: ") + e.what());
  }
}

EmbeddingVector HttpBackend::embed(std::string_view text) {
  if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
  if (config_.embeddings_url.empty()) {
    throw BackendError(BackendError::Kind::kProtocol, "http backend has no embeddings_url");
  }
  Json body{{"model", config_.model}, {"input", std::string(text)}};
  const std::string raw = post_with_retry(config_.embeddings_url, body.dump());
  try {
    const auto doc = Json::parse(raw);
    return EmbeddingVector{doc.at("data").at(0).at("embedding").get<std::vector<double>>()};
  } catch (const Json::exception& e) {
    throw BackendError(BackendError::Kind::kProtocol,
                       std::string("malformed embedding response: ") + e.what());
  }
}

bool HttpBackend::reachable() {
  const auto [base, path] = split_url(config_.url);
  httplib::Client client(base);
  client.set_connection_timeout(std::chrono::milliseconds(500));
  client.set_read_timeout(std::chrono::milliseconds(1000));
  // Any HTTP answer (even 404/405) proves the endpoint is up.
  return static_cast<bool>(client.Get(path));
}

}  // namespace unlearn
