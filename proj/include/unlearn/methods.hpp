#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/baselines.hpp"
#include "unlearn/core.hpp"
#include "unlearn/pipeline.hpp"

namespace unlearn {

enum class Method {
  kAlu,
  kAluAblated,  // ALU without the vanilla agent
  kGuardrail,
  kIcul,
  kVanilla,  // no unlearning
  // One sequential screening call per target; cost grows with the forget set.
  kLinearReference,
};

std::string_view to_string(Method method);
// "alu", "alu_ablated", "guardrail", "icul", "vanilla", "linear_reference".
Method parse_method(std::string_view name);

struct MethodAnswer {
  std::string text;
  std::optional<PipelineOutcome> outcome;  // ALU variants only
};

/// Answers queries with any of the unlearning methods over one backend
/// registry. Baselines call the vanilla agent's backend at its temperature.
class MethodRunner {
 public:
  MethodRunner(const BackendRegistry& backends, PipelineConfig config,
               PromptSet prompts = PromptSet::defaults(), std::vector<IculExample> icul_pool = {});

  MethodAnswer answer(Method method, const Query& query, const ForgetSnapshot& snapshot,
                      std::uint64_t seed = 0) const;

  // The unfiltered answer used for pre-unlearning scores.
  std::string vanilla(const Query& query) const;

  // Predicted choice index, or nullopt when the reply names no letter.
  std::optional<int> answer_mcq(Method method, const McqItem& item, const ForgetSnapshot& snapshot,
                                std::uint64_t seed = 0) const;

  const Pipeline& pipeline() const noexcept { return alu_; }
  const PipelineConfig& config() const noexcept { return alu_.config(); }
  const BackendRegistry& backends() const noexcept { return backends_; }

 private:
  std::string linear_reference(const Query& query, const ForgetSnapshot& snapshot) const;

  const BackendRegistry& backends_;
  Pipeline alu_;
  Pipeline ablated_;
  std::vector<IculExample> icul_pool_;
};

}  // namespace unlearn
