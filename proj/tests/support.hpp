#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"

namespace unlearn::testing {

// Phrases that identify each agent's request under the default prompts.
inline constexpr const char* kVanillaPhrase = "provide the most relevant answers to the query";
inline constexpr const char* kDetectPhrase = "analyze the response and the user query carefully";
inline constexpr const char* kErasePhrase = "rewrite the response so that it contains no direct";
inline constexpr const char* kCriticPhrase = "rate them from a range of 1-5";
inline constexpr const char* kComposerPhrase = "combine the responses into one coherent response";
inline constexpr const char* kGuardrailPhrase = "who is supposed to unlearn about the following person";

inline ScriptedRule rule(std::string match, std::string response,
                         std::vector<std::string> all_of = {},
                         std::chrono::milliseconds latency = {}) {
  ScriptedRule r;
  r.match = std::move(match);
  r.response = std::move(response);
  r.all_of = std::move(all_of);
  r.latency = latency;
  return r;
}

/// Scripted replies for one full pipeline run. `scores[i]` maps a target's
/// canonical name to the critic reply for variant i+1 and that target.
struct Stack {
  std::string vanilla;
  std::string detect;
  std::vector<std::string> variants;
  std::vector<std::map<std::string, std::string>> scores;
  std::string composer = "A composed answer.";
  std::chrono::milliseconds latency{0};
};

inline std::vector<ScriptedRule> rules_for(const Stack& s) {
  std::vector<ScriptedRule> rules;
  rules.push_back(rule(kComposerPhrase, s.composer, {}, s.latency));
  const std::string k = std::to_string(s.variants.size());
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    for (const auto& [name, reply] : s.scores[i]) {
      rules.push_back(rule(kCriticPhrase, reply, {"1. " + s.variants[i], name}, s.latency));
    }
  }
  for (std::size_t i = 0; i < s.variants.size(); ++i) {
    rules.push_back(rule(kErasePhrase, s.variants[i],
                         {"This is variation " + std::to_string(i + 1) + " of " + k},
                         s.latency));
  }
  rules.push_back(rule(kDetectPhrase, s.detect, {}, s.latency));
  rules.push_back(rule(kVanillaPhrase, s.vanilla, {}, s.latency));
  return rules;
}

// Variant texts are distinct and name no target.
inline std::vector<std::string> clean_variants(int k) {
  std::vector<std::string> v;
  for (int i = 1; i <= k; ++i) v.push_back("Sanitized answer number " + std::to_string(i) + ".");
  return v;
}

// One target, critic replies taken from `scores` in variant order.
inline Stack single_target_stack(const std::string& target, const std::vector<int>& scores) {
  Stack s;
  s.vanilla = "The answer mentions " + target + " directly.";
  s.detect = target;
  s.variants = clean_variants(static_cast<int>(scores.size()));
  for (int score : scores) s.scores.push_back({{target, std::to_string(score)}});
  return s;
}

inline std::shared_ptr<ScriptedBackend> scripted(std::vector<ScriptedRule> rules,
                                                 std::string fallback = "fallback") {
  return std::make_shared<ScriptedBackend>(std::move(rules), std::move(fallback));
}

/// Forwards to a scripted backend and keeps every request it saw.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}

  std::string complete(const ChatRequest& request) override {
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    return inner_->complete(request);
  }
  EmbeddingVector embed(std::string_view text) override { return inner_->embed(text); }
  std::string kind() const override { return "recording"; }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

inline BackendRegistry registry_with(std::shared_ptr<ChatBackend> backend,
                                     const std::string& id = "default") {
  BackendRegistry r;
  r.add(id, std::move(backend));
  return r;
}

inline ForgetSnapshot snapshot_of(const std::vector<std::string>& names) {
  ForgetSet set;
  int n = 0;
  for (const auto& name : names) set.add(UnlearnTarget{"t" + std::to_string(++n), name, {}, 0});
  return ForgetSnapshot(std::move(set));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("unlearn-test-" + std::to_string((static_cast<std::uint64_t>(rd()) << 32) | rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace unlearn::testing
