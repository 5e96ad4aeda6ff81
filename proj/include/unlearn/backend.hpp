#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/core.hpp"

namespace unlearn {

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::string model_id;

  bool operator==(const ChatRequest&) const = default;
};

// Throws ValidationError: no messages, negative temperature, max_tokens <= 0.
void validate(const ChatRequest& request);

// Message contents joined by '\n'; the text scripted rules match against.
std::string flatten(const ChatRequest& request);

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// A chat-completion + embedding provider. Implementations must be safe to
/// call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  virtual std::string complete(const ChatRequest& request) = 0;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  // Cheap liveness probe for health reporting.
  virtual bool reachable() { return true; }
  virtual std::string kind() const = 0;
};

enum class MatchKind { kSubstring, kRegex };

/// A rule fires when `match` is found in the flattened request and every
/// string in `all_of` occurs somewhere in it too, in any order.
struct ScriptedRule {
  std::string match;
  MatchKind kind = MatchKind::kSubstring;
  std::string response;
  std::chrono::milliseconds latency{0};
  std::vector<std::string> all_of;
};

// Accepts either a bare rule array or {"rules": [...], "fallback": "..."}.
struct ScriptedScript {
  std::vector<ScriptedRule> rules;
  std::string fallback;
};
// Rule fields: match, match_kind ("substring" | "regex"), response,
// latency_ms, all_of.
ScriptedScript parse_scripted_script(std::string_view json_text);
ScriptedScript load_scripted_script(const std::filesystem::path& path);

/// Deterministic backend: the response of the first rule whose pattern
/// matches the flattened request, after sleeping that rule's latency; the
/// fallback text when nothing matches. Rules are immutable after
/// construction.
class ScriptedBackend final : public ChatBackend {
 public:
  static constexpr std::size_t kEmbeddingDimension = 64;
  static constexpr std::uint64_t kEmbeddingSeed = 0x5eedf00dULL;

  explicit ScriptedBackend(std::vector<ScriptedRule> rules, std::string fallback = {},
                           std::chrono::milliseconds fallback_latency = {});
  explicit ScriptedBackend(ScriptedScript script);

  std::string complete(const ChatRequest& request) override;
  EmbeddingVector embed(std::string_view text) override;
  std::string kind() const override { return "scripted"; }

  // Index of the rule that would answer `request`, if any.
  std::optional<std::size_t> match(const ChatRequest& request) const;
  std::size_t rule_count() const noexcept { return rules_.size(); }
  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  struct Compiled {
    ScriptedRule rule;
    std::optional<std::regex> pattern;
  };
  std::vector<Compiled> rules_;
  std::string fallback_;
  std::chrono::milliseconds fallback_latency_;
  std::atomic<std::uint64_t> calls_{0};
};

// Hash-based pseudo-embedding: lowercased tokens of the whitespace-normalised
// text are feature-hashed (seeded) into `dimension` slots, then scaled to unit
// length.
EmbeddingVector pseudo_embedding(std::string_view text, std::size_t dimension,
                                 std::uint64_t seed);

/// Decorator that raises BackendError(kInjected) on calls selected by a
/// predicate; otherwise forwards to the wrapped backend.
class FaultInjectingBackend final : public ChatBackend {
 public:
  using Predicate = std::function<bool(const ChatRequest&)>;

  FaultInjectingBackend(std::shared_ptr<ChatBackend> inner, Predicate should_fail);

  std::string complete(const ChatRequest& request) override;
  EmbeddingVector embed(std::string_view text) override { return inner_->embed(text); }
  bool reachable() override { return inner_->reachable(); }
  std::string kind() const override { return inner_->kind(); }
  std::uint64_t injected() const noexcept { return injected_.load(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  Predicate should_fail_;
  std::atomic<std::uint64_t> injected_{0};
};

/// Backends by id. Populate before sharing; lookups are then read-only.
class BackendRegistry {
 public:
  void add(std::string id, std::shared_ptr<ChatBackend> backend);
  bool has(std::string_view id) const;
  std::shared_ptr<ChatBackend> get(std::string_view id) const;
  std::vector<std::string> ids() const;

  std::string complete(std::string_view backend_id, const ChatRequest& request) const;
  EmbeddingVector embed(std::string_view backend_id, std::string_view text) const;

 private:
  std::map<std::string, std::shared_ptr<ChatBackend>, std::less<>> backends_;
};

}  // namespace unlearn
