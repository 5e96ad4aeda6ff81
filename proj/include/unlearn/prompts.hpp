#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"

namespace unlearn {

struct FewShotExample {
  std::string input;
  std::string output;

  bool operator==(const FewShotExample&) const = default;
};

inline constexpr std::size_t kMaxFewShot = 10;

/// One agent's prompt: an optional system message, few-shot pairs sent as
/// alternating user/assistant turns, then the rendered `user_template`.
struct PromptTemplate {
  Agent agent = Agent::kVanilla;
  std::string system;
  std::string user_template;
  std::vector<FewShotExample> few_shot;

  bool operator==(const PromptTemplate&) const = default;
};

using PromptVars = std::map<std::string, std::string, std::less<>>;

// Names of `{identifier}` placeholders in order of first appearance.
std::vector<std::string> placeholders(std::string_view templ);

// Substitutes every `{identifier}`; throws ValidationError if any is unbound.
std::string render(std::string_view templ, const PromptVars& vars);

PromptTemplate default_template(Agent agent);

/// The five agent prompts in force for a pipeline.
class PromptSet {
 public:
  static PromptSet defaults();
  // Starts from defaults and replaces pieces found in `dir`:
  // <agent>.txt (user template), <agent>.system.txt, <agent>.fewshot.json.
  static PromptSet load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(Agent agent) const;
  void set(PromptTemplate templ);
  // Applies PipelineConfig::prompt_overrides (user-template text per agent).
  PromptSet with_overrides(const std::map<Agent, std::string>& overrides) const;

 private:
  std::map<Agent, PromptTemplate> templates_;
};

ChatRequest build_request(const PromptTemplate& templ, const PromptVars& vars,
                          double temperature, const std::vector<Message>& history = {});

// Multiple-choice zero-shot template (verbatim, including trailing spaces).
inline constexpr std::string_view kMcqTemplate =
    "The following are multiple choice\n"
    "questions (with answers) \n"
    "about {subject}.\n"
    "\n"
    "\n"
    "{question}\n"
    "A. {choice_A}\n"
    "B. {choice_B}\n"
    "C. {choice_C}\n"
    "D. {choice_D}\n"
    "Answer: ";

std::string render_mcq_prompt(const McqItem& item);

}  // namespace unlearn
