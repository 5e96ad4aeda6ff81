#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/core.hpp"

namespace unlearn {

/// Versioned registry of unlearning targets.
///
/// Readers take snapshots without blocking on writers; mutations are
/// serialised and, for a persistent store, written to disk (temp file +
/// rename) before they become visible. Each successful mutation bumps the
/// version by one.
class ForgetStore {
 public:
  using Clock = std::function<Timestamp()>;

  // In-memory store.
  explicit ForgetStore(Clock clock = {});
  // Persistent store; loads `path` when it exists, else starts empty.
  explicit ForgetStore(std::filesystem::path path, Clock clock = {});

  ForgetStore(const ForgetStore&) = delete;
  ForgetStore& operator=(const ForgetStore&) = delete;

  UnlearnTarget add_target(std::string_view name, std::vector<std::string> aliases = {});
  UnlearnTarget remove_target(std::string_view id);
  // Swaps in a whole target list (ids kept as given), one version step.
  void replace_all(std::vector<UnlearnTarget> targets);

  ForgetSnapshot snapshot() const;
  std::uint64_t version() const { return snapshot().version(); }
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  void publish(ForgetSet next);

  std::optional<std::filesystem::path> path_;
  Clock clock_;
  std::mutex write_mutex_;
  std::shared_ptr<const ForgetSet> current_;
};

Timestamp now_millis();

/// Builds a forget set of exactly `total` targets: every real name plus
/// seeded, uniformly sampled distinct dummies that collide with no real name,
/// in seeded-shuffled order. Throws ValidationError when real names exceed
/// `total` or the pool cannot supply enough distinct dummies.
ForgetSet generate_sparse_set(const std::vector<std::string>& real_names,
                              const std::vector<std::string>& dummy_pool, std::size_t total,
                              std::uint64_t seed);

// Newline-delimited names; blank lines and '#' comments skipped.
std::vector<std::string> load_name_pool(const std::filesystem::path& path);

}  // namespace unlearn
