#include "unlearn/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/serialization.hpp"

namespace unlearn {
namespace {

constexpr std::string_view kVanillaSystem =
    "You are a helpful assistant, and provided a user query, your job is to provide the most "
    "relevant answers to the query.";

constexpr std::string_view kAuditDetectTemplate =
    "Given this user query: {query}, and the prior response to the query as: "
    "`{vanilla_response}`, analyze the response and the user query carefully to observe if the "
    "answer to the user query leaks any kind of direct or indirect information about any of the "
    "subjects in the given list: `{unlearning_targets}`. Note that it's not important for the "
    "subject to be directly mentioned in the list, even if there is any indirect correlation of "
    "the subject present in the user query or the response and the subject is present in the "
    "list, respond with its name. If any direct or indirect information, which might involve "
    "last names of individuals or indirect references to subjects, is leaked about \n"
    "any one or multiple subjects from the list, or even if the subject in the response is "
    "present in the list - `{unlearning_targets}`, respond with the name of the subject. In case "
    "you are very sure that none of the responses in the list leak any sort of direct or "
    "indirect information about any of the items in the list, respond with `None`. Double check "
    "your response to verify if the subject you are mentioning is actually present in the list. "
    "Do not hallucinate. Think in steps, verify each step before proceeding. Compare each item "
    "in the list explicitly with the subjects to limit the rate of false positives. Do not "
    "mention the presence of an individual who's not in the list.";

constexpr std::string_view kAuditEraseSystem =
    "You are a helpful assistant that rewrites responses so that they reveal nothing about a "
    "given list of unlearning subjects while keeping as much useful content as possible.";

constexpr std::string_view kAuditEraseTemplate =
    "Given this user query: {query}, and the prior response to the query as: "
    "`{vanilla_response}`, rewrite the response so that it contains no direct or indirect "
    "information about any of the subjects in the list: `{unlearning_targets}`. Remove names, "
    "last names, relationships and any other clue that would let a reader identify these "
    "subjects, and keep every other useful detail of the answer. Respond with the rewritten "
    "response only. This is variation {variant_index} of {variant_count}; take your own "
    "approach to concealing the subjects.";

constexpr std::string_view kCriticSystem =
    "You are a helpful assistant, and provided a list of responses which have been edited such "
    "that they contain no direct/indirect information about any of the subjects in a list of "
    "unlearning subjects, (which will also be provided to you), your job is to critically "
    "analyze each and every response in the provided list \n"
    "and rate them from a range of 1-5 based on how well the response has forgotten information "
    "concerning any/multiple  \n"
    "your job is to critically analyze each response, and given a certain unlearning subject "
    "(or a list of subjects),\n"
    "you'll edit the original responses such that they contain no information about the "
    "unlearning subjects,directly\n"
    "or indirectly. A rating of 1 will be provided if the response is very evident about the "
    "presence of any of the unlearning subjects,\n"
    "and it can be clearly understood from the response that the response has direct/indirect "
    "knowledge about the unlearning subject.\n"
    "A rating of 5 will be provided in cases where the response has no clues/traces about any "
    "of the unlearning subjects. \n"
    "This means that a response with a rating of 5 will not only not include any direct traits "
    "of any of the unlearning subjects,\n"
    "but also they won't leak any information about any form of relationships of the subjects "
    "with other subjects who are not meant to be unlearned. Respond with a list of the ratings "
    "in correspondence with the unlearned responses.";

constexpr std::string_view kCriticTemplate =
    "Unlearning subjects: `{unlearning_targets}`\n"
    "Responses:\n"
    "{responses}\n"
    "Respond with the rating.";

constexpr std::string_view kComposerSystem =
    "You are a helpful assistant, and you will be provided with a list of responses. Given the "
    "list of responses and a list of unlearning targets, you need to combine the responses into "
    "one coherent response which adheres to the same theme as the initial list of responses "
    "provided, ensuring that the final response that you generate contains no clue about any of "
    "the unlearning subjects. The responses that you will be provided with have already "
    "undergone a pipeline which has ensured that they do not contain any information about the "
    "unlearning subjects, your job is to observe the responses\n"
    "very carefully and take out the best points from them to form a final answer.";

constexpr std::string_view kComposerTemplate =
    "Unlearning subjects: `{unlearning_targets}`\n"
    "Responses:\n"
    "{responses}";

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Visits text runs and placeholders. `on_text(view)`, `on_placeholder(name)`.
template <typename OnText, typename OnPlaceholder>
void scan(std::string_view templ, OnText on_text, OnPlaceholder on_placeholder) {
  std::size_t i = 0;
  std::size_t run_start = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      std::size_t j = i + 1;
      while (j < templ.size() && is_ident_char(templ[j])) ++j;
      if (j > i + 1 && j < templ.size() && templ[j] == '}') {
        on_text(templ.substr(run_start, i - run_start));
        on_placeholder(templ.substr(i + 1, j - i - 1));
        i = j + 1;
        run_start = i;
        continue;
      }
    }
    ++i;
  }
  on_text(templ.substr(run_start));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<std::string> placeholders(std::string_view templ) {
  std::vector<std::string> names;
  scan(
      templ, [](std::string_view) {},
      [&](std::string_view name) {
        for (const auto& n : names) {
          if (n == name) return;
        }
        names.emplace_back(name);
      });
  return names;
}

std::string render(std::string_view templ, const PromptVars& vars) {
  std::string out;
  out.reserve(templ.size());
  scan(
      templ, [&](std::string_view t) { out.append(t); },
      [&](std::string_view name) {
        auto it = vars.find(name);
        if (it == vars.end()) {
          throw ValidationError("template placeholder {" + std::string(name) + "} is unbound");
        }
        out.append(it->second);
      });
  return out;
}

PromptTemplate default_template(Agent agent) {
  switch (agent) {
    case Agent::kVanilla:
      return {agent, std::string(kVanillaSystem), "{query}", {}};
    case Agent::kAuditDetect:
      return {agent, "", std::string(kAuditDetectTemplate), {}};
    case Agent::kAuditErase:
      return {agent, std::string(kAuditEraseSystem), std::string(kAuditEraseTemplate), {}};
    case Agent::kCritic:
      return {agent, std::string(kCriticSystem), std::string(kCriticTemplate), {}};
    case Agent::kComposer:
      return {agent, std::string(kComposerSystem), std::string(kComposerTemplate), {}};
  }
  throw ValidationError("unknown agent");
}

PromptSet PromptSet::defaults() {
  PromptSet set;
  for (Agent a : kAllAgents) set.templates_[a] = default_template(a);
  return set;
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("prompt directory " + dir.string() + " does not exist");
  }
  PromptSet set = defaults();
  for (Agent a : kAllAgents) {
    PromptTemplate t = set.get(a);
    const std::string base(to_string(a));
    if (auto p = dir / (base + ".txt"); std::filesystem::exists(p)) t.user_template = read_file(p);
    if (auto p = dir / (base + ".system.txt"); std::filesystem::exists(p)) t.system = read_file(p);
    if (auto p = dir / (base + ".fewshot.json"); std::filesystem::exists(p)) {
      t.few_shot.clear();
      try {
        for (const auto& ex : Json::parse(read_file(p))) {
          t.few_shot.push_back({ex.at("input").get<std::string>(), ex.at("output").get<std::string>()});
        }
      } catch (const Json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
      }
    }
    set.set(std::move(t));
  }
  return set;
}

const PromptTemplate& PromptSet::get(Agent agent) const { return templates_.at(agent); }

void PromptSet::set(PromptTemplate templ) {
  if (templ.few_shot.size() > kMaxFewShot) {
    throw ValidationError("at most " + std::to_string(kMaxFewShot) + " few-shot examples per agent");
  }
  templates_[templ.agent] = std::move(templ);
}

PromptSet PromptSet::with_overrides(const std::map<Agent, std::string>& overrides) const {
  PromptSet out = *this;
  for (const auto& [agent, text] : overrides) out.templates_[agent].user_template = text;
  return out;
}

ChatRequest build_request(const PromptTemplate& templ, const PromptVars& vars, double temperature,
                          const std::vector<Message>& history) {
  ChatRequest req;
  req.temperature = temperature;
  if (!templ.system.empty()) req.messages.push_back({Role::kSystem, render(templ.system, vars)});
  for (const auto& ex : templ.few_shot) {
    req.messages.push_back({Role::kUser, ex.input});
    req.messages.push_back({Role::kAssistant, ex.output});
  }
  req.messages.insert(req.messages.end(), history.begin(), history.end());
  req.messages.push_back({Role::kUser, render(templ.user_template, vars)});
  return req;
}

std::string render_mcq_prompt(const McqItem& item) {
  return render(kMcqTemplate, PromptVars{{"subject", item.subject},
                                         {"question", item.question},
                                         {"choice_A", item.choices[0]},
                                         {"choice_B", item.choices[1]},
                                         {"choice_C", item.choices[2]},
                                         {"choice_D", item.choices[3]}});
}

}  // namespace unlearn
