#include "unlearn/core.hpp"

#include <algorithm>
#include <unordered_set>

#include "unlearn/errors.hpp"
#include "unlearn/text.hpp"

namespace unlearn {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw ValidationError("unknown role '" + std::string(s) + "'");
}

std::string_view to_string(Agent agent) {
  switch (agent) {
    case Agent::kVanilla:
      return "vanilla";
    case Agent::kAuditDetect:
      return "audit_detect";
    case Agent::kAuditErase:
      return "audit_erase";
    case Agent::kCritic:
      return "critic";
    case Agent::kComposer:
      return "composer";
  }
  return "vanilla";
}

Agent parse_agent(std::string_view s) {
  for (Agent a : kAllAgents) {
    if (to_string(a) == s) return a;
  }
  throw ValidationError("unknown agent '" + std::string(s) + "'");
}

std::vector<std::string> UnlearnTarget::names() const {
  std::vector<std::string> out;
  out.reserve(aliases.size() + 1);
  out.push_back(canonical_name);
  out.insert(out.end(), aliases.begin(), aliases.end());
  return out;
}

void validate(const UnlearnTarget& target) {
  if (target.id.empty()) throw ValidationError("target id is empty");
  if (text::trim(target.canonical_name).empty()) {
    throw ValidationError("target name is empty");
  }
  std::unordered_set<std::string> seen{text::to_lower(target.canonical_name)};
  for (const auto& alias : target.aliases) {
    if (text::trim(alias).empty()) throw ValidationError("alias is empty");
    if (!seen.insert(text::to_lower(alias)).second) {
      throw ValidationError("alias '" + alias + "' repeats a name of target '" +
                            target.canonical_name + "'");
    }
  }
}

ForgetSet::ForgetSet(std::vector<UnlearnTarget> targets, std::uint64_t version) {
  for (auto& t : targets) {
    validate(t);
    if (find(t.id)) throw DuplicateError("duplicate target id '" + t.id + "'");
    check_names_free(t);
    targets_.push_back(std::move(t));
  }
  version_ = version;
}

const UnlearnTarget* ForgetSet::find(std::string_view id) const {
  auto it = std::find_if(targets_.begin(), targets_.end(),
                         [&](const UnlearnTarget& t) { return t.id == id; });
  return it == targets_.end() ? nullptr : &*it;
}

const UnlearnTarget* ForgetSet::find_by_name(std::string_view name) const {
  for (const auto& t : targets_) {
    if (text::iequals(t.canonical_name, name)) return &t;
    for (const auto& alias : t.aliases) {
      if (text::iequals(alias, name)) return &t;
    }
  }
  return nullptr;
}

void ForgetSet::check_names_free(const UnlearnTarget& target) const {
  for (const auto& name : target.names()) {
    if (const auto* existing = find_by_name(name)) {
      throw DuplicateError("duplicate target: '" + name + "' already names '" +
                           existing->canonical_name + "'");
    }
  }
}

void ForgetSet::add(UnlearnTarget target) {
  validate(target);
  if (find(target.id)) throw DuplicateError("duplicate target id '" + target.id + "'");
  check_names_free(target);
  targets_.push_back(std::move(target));
  ++version_;
}

UnlearnTarget ForgetSet::remove(std::string_view id) {
  auto it = std::find_if(targets_.begin(), targets_.end(),
                         [&](const UnlearnTarget& t) { return t.id == id; });
  if (it == targets_.end()) throw NotFoundError("unknown target id '" + std::string(id) + "'");
  UnlearnTarget removed = std::move(*it);
  targets_.erase(it);
  ++version_;
  return removed;
}

ForgetSnapshot::ForgetSnapshot() : set_(std::make_shared<const ForgetSet>()) {}

ForgetSnapshot::ForgetSnapshot(ForgetSet set)
    : set_(std::make_shared<const ForgetSet>(std::move(set))) {}

ForgetSnapshot::ForgetSnapshot(std::shared_ptr<const ForgetSet> set) : set_(std::move(set)) {
  if (!set_) set_ = std::make_shared<const ForgetSet>();
}

std::vector<std::string> ForgetSnapshot::canonical_names() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& t : targets()) out.push_back(t.canonical_name);
  return out;
}

void validate(const Query& query) {
  if (text::trim(query.text).empty()) throw ValidationError("query text is empty");
}

CriticRating make_rating(int variant_index, std::map<std::string, int> per_target_scores) {
  if (per_target_scores.empty()) throw ValidationError("rating has no target scores");
  int aggregate = 5;
  for (const auto& [id, score] : per_target_scores) {
    if (score < 1 || score > 5) {
      throw ValidationError("score " + std::to_string(score) + " for '" + id +
                            "' outside 1..5");
    }
    aggregate = std::min(aggregate, score);
  }
  return CriticRating{variant_index, std::move(per_target_scores), aggregate};
}

const std::string& PipelineConfig::backend_for(Agent agent) const {
  auto it = backend_routes.find(agent);
  return it == backend_routes.end() ? default_backend : it->second;
}

double PipelineConfig::temperature_for(Agent agent) const {
  auto it = temperatures.find(agent);
  return it == temperatures.end() ? 0.0 : it->second;
}

void validate(const PipelineConfig& config) {
  if (config.k < 1) throw ValidationError("k must be >= 1");
  if (config.j < 1 || config.j > config.k) throw ValidationError("j must satisfy 1 <= j <= k");
  if (!(config.threshold >= 1.0 && config.threshold <= 5.0)) {
    throw ValidationError("threshold must lie in [1, 5]");
  }
  if (config.max_parallel < 1) throw ValidationError("max_parallel must be >= 1");
  for (const auto& [agent, t] : config.temperatures) {
    if (!(t >= 0.0)) throw ValidationError("temperature must be >= 0");
  }
}

void validate(const McqItem& item) {
  if (item.answer_index < 0 || item.answer_index > 3) {
    throw ValidationError("answer_index must be in [0, 3]");
  }
  if (text::trim(item.question).empty()) throw ValidationError("mcq question is empty");
}

}  // namespace unlearn
