#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"
#include "unlearn/prompts.hpp"

namespace unlearn {

// A stage that could not produce its output. The pipeline converts these into
// the null response.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct DetectionResult {
  DetectedTargets targets;
  std::vector<std::string> discarded_names;
  bool unparseable = false;
  std::string raw;
};

// Interprets an audit-detect completion against a snapshot. "None" means no
// targets; names are resolved case-insensitively against canonical names and
// aliases, and anything outside the snapshot is discarded.
DetectionResult parse_detection(std::string_view completion, const ForgetSnapshot& snapshot);

// First standalone digit 1..5 in a critic completion.
std::optional<int> parse_score(std::string_view completion);

// First standalone capital letter A..D, mapped to 0..3.
std::optional<int> parse_choice_letter(std::string_view completion);

struct VariantBatch {
  std::vector<SanitizedVariant> variants;
  std::vector<VariantFailure> failures;
};

struct RatingResult {
  std::optional<CriticRating> rating;
  std::vector<RatingError> errors;
};

struct TopJ {
  std::vector<SanitizedVariant> selected;  // best first
  double mean = 0.0;
};

// The j best-rated variants (ties to the lower index) and their mean
// aggregate. Throws ValidationError when fewer than j ratings are available.
TopJ select_top_j(const std::vector<CriticRating>& ratings,
                  const std::vector<SanitizedVariant>& variants, int j);

struct McqOutcome {
  std::optional<int> choice;
  bool bypassed = false;  // a target fired and the answer was drawn at random
  std::string raw;
  std::string error;
  DetectionResult detection;
};

/// Vanilla -> AuditErase -> Critic -> Composer.
///
/// A run reads only the snapshot it is handed and this object's config, so
/// one Pipeline may serve concurrent requests. Erase calls fan out
/// concurrently, as do all critic calls; the stages themselves are barriers.
class Pipeline {
 public:
  Pipeline(const BackendRegistry& backends, PipelineConfig config,
           PromptSet prompts = PromptSet::defaults());

  const PipelineConfig& config() const noexcept { return config_; }
  const PromptSet& prompts() const noexcept { return prompts_; }

  VanillaResponse run_vanilla(const Query& query, PipelineTrace* trace = nullptr) const;

  DetectionResult detect_targets(const VanillaResponse& vanilla, const Query& query,
                                 const ForgetSnapshot& snapshot,
                                 PipelineTrace* trace = nullptr) const;

  // `vanilla` is null in skip-vanilla mode.
  VariantBatch generate_variants(const VanillaResponse* vanilla, const Query& query,
                                 const DetectedTargets& detected, const ForgetSnapshot& snapshot,
                                 PipelineTrace* trace = nullptr) const;

  RatingResult rate_variant(const SanitizedVariant& variant, const DetectedTargets& detected,
                            const ForgetSnapshot& snapshot, PipelineTrace* trace = nullptr) const;

  // Fills final_text / is_null and the composer part of the trace.
  PipelineOutcome compose_final(const std::vector<SanitizedVariant>& selected, double mean,
                                const ForgetSnapshot& snapshot,
                                PipelineOutcome outcome = {}) const;

  // Never returns the vanilla text once detection fired; stage failures
  // yield the null response. Throws ValidationError for an invalid query.
  PipelineOutcome run(const Query& query, const ForgetSnapshot& snapshot) const;

  McqOutcome run_mcq(const McqItem& item, const ForgetSnapshot& snapshot) const;

 private:
  std::string call(Agent agent, const ChatRequest& request, PipelineTrace* trace) const;
  std::vector<RatingResult> rate_all(const std::vector<SanitizedVariant>& variants,
                                     const DetectedTargets& detected,
                                     const ForgetSnapshot& snapshot, PipelineTrace* trace) const;
  PipelineOutcome null_outcome(PipelineOutcome outcome, const std::string& stage,
                               const std::string& why) const;

  const BackendRegistry& backends_;
  PipelineConfig config_;
  PromptSet prompts_;
};

}  // namespace unlearn
