#include "unlearn/forget_store.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "unlearn/errors.hpp"
#include "unlearn/random.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Timestamp now_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ForgetStore::ForgetStore(Clock clock)
    : clock_(clock ? std::move(clock) : Clock(now_millis)),
      current_(std::make_shared<const ForgetSet>()) {}

ForgetStore::ForgetStore(std::filesystem::path path, Clock clock) : ForgetStore(std::move(clock)) {
  path_ = std::move(path);
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_);
    if (!in) throw ConfigError("cannot read store file " + path_->string());
    try {
      current_ = std::make_shared<const ForgetSet>(Json::parse(in).get<ForgetSet>());
    } catch (const Json::exception& e) {
      throw ParseError("store file " + path_->string() + ": " + e.what());
    }
  }
}

ForgetSnapshot ForgetStore::snapshot() const {
  return ForgetSnapshot(std::atomic_load(&current_));
}

void ForgetStore::publish(ForgetSet next) {
  if (path_) write_atomically(*path_, Json(next).dump(2) + "\n");
  std::atomic_store(&current_, std::make_shared<const ForgetSet>(std::move(next)));
}

UnlearnTarget ForgetStore::add_target(std::string_view name, std::vector<std::string> aliases) {
  std::lock_guard lock(write_mutex_);
  ForgetSet next = *current_;
  UnlearnTarget target;
  target.canonical_name = text::trim(name);
  if (target.canonical_name.empty()) throw ValidationError("target name is empty");
  for (auto& a : aliases) target.aliases.push_back(text::trim(a));
  target.id = "t" + std::to_string(next.version() + 1);
  while (next.find(target.id)) target.id += "x";
  target.added_at = clock_();
  next.add(target);
  publish(std::move(next));
  return target;
}

UnlearnTarget ForgetStore::remove_target(std::string_view id) {
  std::lock_guard lock(write_mutex_);
  ForgetSet next = *current_;
  UnlearnTarget removed = next.remove(id);
  publish(std::move(next));
  return removed;
}

void ForgetStore::replace_all(std::vector<UnlearnTarget> targets) {
  std::lock_guard lock(write_mutex_);
  ForgetSet next(std::move(targets), current_->version() + 1);
  publish(std::move(next));
}

ForgetSet generate_sparse_set(const std::vector<std::string>& real_names,
                              const std::vector<std::string>& dummy_pool, std::size_t total,
                              std::uint64_t seed) {
  if (total == 0) throw ValidationError("total must be positive");
  if (real_names.size() > total) {
    throw ValidationError("more real names (" + std::to_string(real_names.size()) +
                          ") than total targets (" + std::to_string(total) + ")");
  }
  std::unordered_set<std::string> taken;
  for (const auto& n : real_names) taken.insert(text::to_lower(text::trim(n)));

  std::vector<std::string> candidates;
  for (const auto& raw : dummy_pool) {
    auto name = text::trim(raw);
    if (name.empty()) continue;
    if (taken.insert(text::to_lower(name)).second) candidates.push_back(std::move(name));
  }
  const std::size_t needed = total - real_names.size();
  if (candidates.size() < needed) {
    throw ValidationError("dummy pool supplies " + std::to_string(candidates.size()) +
                          " distinct names, need " + std::to_string(needed));
  }

  Rng rng(seed);
  // Partial Fisher-Yates: the first `needed` slots become a uniform sample.
  for (std::size_t i = 0; i < needed; ++i) {
    std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
  }
  std::vector<std::string> names(real_names.begin(), real_names.end());
  names.insert(names.end(), candidates.begin(), candidates.begin() + static_cast<long>(needed));
  seeded_shuffle(names, rng);

  std::vector<UnlearnTarget> targets;
  targets.reserve(total);
  for (std::size_t i = 0; i < names.size(); ++i) {
    targets.push_back(UnlearnTarget{"s" + std::to_string(i + 1), text::trim(names[i]), {}, 0});
  }
  return ForgetSet(std::move(targets), total);
}

std::vector<std::string> load_name_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open name pool " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto name = text::trim(line);
    if (name.empty() || name.front() == '#') continue;
    names.push_back(std::move(name));
  }
  return names;
}

}  // namespace unlearn
