#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace unlearn {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view s);

struct Message {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const Message&) const = default;
};

// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

/// A named entity whose information must not surface in responses.
///
/// `aliases` never repeats (case-insensitively) and never contains the
/// canonical name; `canonical_name` is non-blank.
struct UnlearnTarget {
  std::string id;
  std::string canonical_name;
  std::vector<std::string> aliases;
  Timestamp added_at = 0;

  // Canonical name followed by aliases.
  std::vector<std::string> names() const;

  bool operator==(const UnlearnTarget&) const = default;
};

// Throws ValidationError when a target breaks its invariants.
void validate(const UnlearnTarget& target);

/// The live list of unlearning targets.
///
/// Ids are unique and every name (canonical or alias) is unique
/// case-insensitively across the whole set. Each successful mutation bumps
/// `version` by exactly one; rejected mutations leave it unchanged.
class ForgetSet {
 public:
  ForgetSet() = default;
  // Validates the invariants; throws ValidationError / DuplicateError.
  ForgetSet(std::vector<UnlearnTarget> targets, std::uint64_t version);

  const std::vector<UnlearnTarget>& targets() const noexcept { return targets_; }
  std::uint64_t version() const noexcept { return version_; }
  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }

  const UnlearnTarget* find(std::string_view id) const;
  // Case-insensitive match against canonical names and aliases.
  const UnlearnTarget* find_by_name(std::string_view name) const;

  void add(UnlearnTarget target);
  UnlearnTarget remove(std::string_view id);

  bool operator==(const ForgetSet&) const = default;

 private:
  void check_names_free(const UnlearnTarget& target) const;

  std::vector<UnlearnTarget> targets_;
  std::uint64_t version_ = 0;
};

/// Immutable view of a ForgetSet bound to one request.
class ForgetSnapshot {
 public:
  ForgetSnapshot();
  explicit ForgetSnapshot(ForgetSet set);
  explicit ForgetSnapshot(std::shared_ptr<const ForgetSet> set);

  const std::vector<UnlearnTarget>& targets() const noexcept { return set_->targets(); }
  std::uint64_t version() const noexcept { return set_->version(); }
  std::size_t size() const noexcept { return set_->size(); }
  bool empty() const noexcept { return set_->empty(); }
  const ForgetSet& set() const noexcept { return *set_; }

  const UnlearnTarget* find(std::string_view id) const { return set_->find(id); }
  const UnlearnTarget* find_by_name(std::string_view name) const { return set_->find_by_name(name); }
  std::vector<std::string> canonical_names() const;

  bool operator==(const ForgetSnapshot& other) const { return *set_ == *other.set_; }

 private:
  std::shared_ptr<const ForgetSet> set_;
};

struct Query {
  std::string text;
  std::vector<Message> history;

  bool operator==(const Query&) const = default;
};

void validate(const Query& query);

struct VanillaResponse {
  std::string text;

  bool operator==(const VanillaResponse&) const = default;
};

// Ids of targets found in a response; always a subset of the snapshot used.
struct DetectedTargets {
  std::vector<std::string> ids;

  bool empty() const noexcept { return ids.empty(); }
  bool operator==(const DetectedTargets&) const = default;
};

struct SanitizedVariant {
  int index = 0;  // 1-based, contiguous within a batch, issue order
  std::string text;
  DetectedTargets for_targets;

  bool operator==(const SanitizedVariant&) const = default;
};

struct CriticRating {
  int variant_index = 0;
  std::map<std::string, int> per_target_scores;
  int aggregate = 0;  // min over per_target_scores

  bool operator==(const CriticRating&) const = default;
};

// Builds a rating with aggregate = min score. Throws ValidationError on an
// empty score map or a score outside 1..5.
CriticRating make_rating(int variant_index, std::map<std::string, int> per_target_scores);

enum class Agent { kVanilla, kAuditDetect, kAuditErase, kCritic, kComposer };

inline constexpr std::array<Agent, 5> kAllAgents = {Agent::kVanilla, Agent::kAuditDetect,
                                                    Agent::kAuditErase, Agent::kCritic,
                                                    Agent::kComposer};

std::string_view to_string(Agent agent);
Agent parse_agent(std::string_view s);

inline constexpr std::string_view kDefaultNullResponse = "I am sorry, I cannot respond to that";

struct PipelineConfig {
  int k = 5;
  int j = 3;
  double threshold = 4.0;
  std::string null_response{kDefaultNullResponse};
  bool skip_vanilla = false;
  // Replacement template text (user-message part) per agent.
  std::map<Agent, std::string> prompt_overrides;
  // Backend id per agent; agents without an entry use `default_backend`.
  std::map<Agent, std::string> backend_routes;
  std::string default_backend = "default";
  std::map<Agent, double> temperatures = {{Agent::kVanilla, 0.7},
                                          {Agent::kAuditDetect, 0.0},
                                          {Agent::kAuditErase, 0.9},
                                          {Agent::kCritic, 0.0},
                                          {Agent::kComposer, 0.7}};
  std::uint64_t random_seed = 0;
  // Upper bound on concurrent backend calls within one fan-out stage.
  int max_parallel = 8;

  const std::string& backend_for(Agent agent) const;
  double temperature_for(Agent agent) const;

  bool operator==(const PipelineConfig&) const = default;
};

// Throws ValidationError unless 1 <= j <= k and 1 <= threshold <= 5.
void validate(const PipelineConfig& config);

struct StageTiming {
  std::string stage;
  double millis = 0.0;

  bool operator==(const StageTiming&) const = default;
};

struct VariantFailure {
  int index = 0;
  std::string error;

  bool operator==(const VariantFailure&) const = default;
};

struct RatingError {
  int variant_index = 0;
  std::string target_id;
  std::string error;
  std::string raw;

  bool operator==(const RatingError&) const = default;
};

/// Per-stage audit record of one pipeline run. `stages` lists executed stages
/// in pipeline order.
struct PipelineTrace {
  std::string mode = "full";  // "full" | "skip_vanilla"
  std::vector<std::string> stages;
  std::uint64_t snapshot_version = 0;
  std::optional<std::string> vanilla_text;
  std::string detect_raw;
  std::vector<std::string> detected_ids;
  std::vector<std::string> discarded_names;
  bool detect_unparseable = false;
  bool short_circuit = false;
  std::vector<SanitizedVariant> variants;
  std::vector<VariantFailure> variant_failures;
  std::vector<CriticRating> ratings;
  std::vector<RatingError> rating_errors;
  std::vector<int> selected_indices;
  std::optional<double> mean_score;
  std::optional<std::string> composer_raw;
  std::optional<std::string> failure_stage;
  std::string failure;
  int backend_calls = 0;

  bool operator==(const PipelineTrace&) const = default;
};

struct PipelineOutcome {
  std::string final_text;
  bool is_null = false;
  PipelineTrace trace;
  std::vector<StageTiming> timings;

  bool operator==(const PipelineOutcome&) const = default;
};

struct McqItem {
  std::string subject;
  std::string question;
  std::array<std::string, 4> choices;
  int answer_index = 0;

  bool operator==(const McqItem&) const = default;
};

void validate(const McqItem& item);

struct MetricScores {
  double rouge_l = 0.0;
  double cosine = 0.0;

  bool operator==(const MetricScores&) const = default;
};

struct MetricReport {
  MetricScores pre_ul;
  MetricScores post_ul;
  MetricScores retain;
  double f_score = 0.0;
  std::int64_t leak_count = 0;
  std::int64_t false_positive_count = 0;
  std::optional<double> mcq_accuracy;
  std::map<std::string, double> timings;  // label -> milliseconds

  bool operator==(const MetricReport&) const = default;
};

}  // namespace unlearn
