#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"

namespace unlearn {

// Prompt-prefix guardrail. Lines are separated by '\n'; the bullets are
// U+2212 MINUS SIGN.
inline constexpr std::string_view kGuardrailTemplate =
    "You are an AI Assistant who is supposed to unlearn about the following person: "
    "{unlearning_targets}.\n"
    "\xE2\x88\x92 When asked about any of them: Provide answers without their knowledge as if "
    "you never knew about them.\n"
    "\xE2\x88\x92 For all other inquiries: Respond normally with the relevant information you "
    "have.\n"
    "Don't tell anyone that you unlearned anything.\n"
    "{question}";

std::string render_guardrail_prompt(const Query& query, const ForgetSnapshot& snapshot);

// One backend call whose only message is the rendered guardrail system prompt.
std::string guardrail_respond(const Query& query, const ForgetSnapshot& snapshot,
                              const BackendRegistry& backends, std::string_view backend_id,
                              double temperature = 0.7);

struct IculExample {
  std::string input;
  std::string label;
  bool is_forget = false;

  bool operator==(const IculExample&) const = default;
};

// Fallback label when no other example offers a different one.
inline constexpr std::string_view kIculUnknownLabel = "I don't know.";

/// In-context unlearning request: each forget example with a flipped label,
/// then each normal example with its own label, then the bare query, one
/// "input label" pair per line, as a single user message at temperature 0.
///
/// A flipped label is drawn uniformly (seeded) from the labels of the other
/// examples that differ from the example's own label.
ChatRequest build_icul_context(const std::vector<IculExample>& forget_examples,
                               const std::vector<IculExample>& normal_examples,
                               const Query& query, std::uint64_t seed = 0);

// [{input, label, is_forget}]
std::vector<IculExample> load_icul_pool(const std::filesystem::path& path);

struct IculSplit {
  std::vector<IculExample> forget;
  std::vector<IculExample> normal;
};

// Forget examples from `pool` whose input names a snapshot target; targets
// without one get a synthesised "Who is <name>?" example, so the context
// grows with the forget set. Normal examples are the pool's non-forget items.
IculSplit icul_examples_for(const ForgetSnapshot& snapshot, const std::vector<IculExample>& pool);

std::string icul_respond(const Query& query, const ForgetSnapshot& snapshot,
                         const std::vector<IculExample>& pool, const BackendRegistry& backends,
                         std::string_view backend_id, std::uint64_t seed = 0);

}  // namespace unlearn
