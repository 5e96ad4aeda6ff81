#include "unlearn/methods.hpp"

#include "unlearn/errors.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/random.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kAlu, "alu"},
    {Method::kAluAblated, "alu_ablated"},
    {Method::kGuardrail, "guardrail"},
    {Method::kIcul, "icul"},
    {Method::kVanilla, "vanilla"},
    {Method::kLinearReference, "linear_reference"},
};

PipelineConfig with_skip_vanilla(PipelineConfig config, bool skip) {
  config.skip_vanilla = skip;
  return config;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

MethodRunner::MethodRunner(const BackendRegistry& backends, PipelineConfig config,
                           PromptSet prompts, std::vector<IculExample> icul_pool)
    : backends_(backends),
      alu_(backends, with_skip_vanilla(config, false), prompts),
      ablated_(backends, with_skip_vanilla(config, true), prompts),
      icul_pool_(std::move(icul_pool)) {}

MethodAnswer MethodRunner::answer(Method method, const Query& query,
                                  const ForgetSnapshot& snapshot, std::uint64_t seed) const {
  const auto& cfg = config();
  const auto& vanilla_backend = cfg.backend_for(Agent::kVanilla);
  switch (method) {
    case Method::kAlu:
    case Method::kAluAblated: {
      auto outcome = (method == Method::kAlu ? alu_ : ablated_).run(query, snapshot);
      std::string text = outcome.final_text;
      return {std::move(text), std::move(outcome)};
    }
    case Method::kGuardrail:
      return {guardrail_respond(query, snapshot, backends_, vanilla_backend,
                                cfg.temperature_for(Agent::kVanilla)),
              std::nullopt};
    case Method::kIcul:
      return {icul_respond(query, snapshot, icul_pool_, backends_, vanilla_backend,
                           mix_seed(cfg.random_seed, seed)),
              std::nullopt};
    case Method::kVanilla:
      return {vanilla(query), std::nullopt};
    case Method::kLinearReference:
      return {linear_reference(query, snapshot), std::nullopt};
  }
  throw ValidationError("unknown method");
}

std::string MethodRunner::vanilla(const Query& query) const {
  return alu_.run_vanilla(query).text;
}

std::string MethodRunner::linear_reference(const Query& query,
                                           const ForgetSnapshot& snapshot) const {
  validate(query);
  const auto& cfg = config();
  std::string reply = vanilla(query);
  for (const auto& target : snapshot.targets()) {
    ChatRequest req;
    req.temperature = cfg.temperature_for(Agent::kVanilla);
    req.messages.push_back(
        {Role::kSystem, render(kGuardrailTemplate,
                               PromptVars{{"unlearning_targets", target.canonical_name},
                                          {"question", query.text + "\n" + reply}})});
    reply = backends_.complete(cfg.backend_for(Agent::kVanilla), req);
  }
  return reply;
}

std::optional<int> MethodRunner::answer_mcq(Method method, const McqItem& item,
                                            const ForgetSnapshot& snapshot,
                                            std::uint64_t seed) const {
  if (method == Method::kAlu || method == Method::kAluAblated) {
    return (method == Method::kAlu ? alu_ : ablated_).run_mcq(item, snapshot).choice;
  }
  validate(item);
  if (method == Method::kVanilla) {
    ChatRequest req;
    req.temperature = 0.0;
    req.messages.push_back({Role::kUser, render_mcq_prompt(item)});
    return parse_choice_letter(backends_.complete(config().backend_for(Agent::kVanilla), req));
  }
  return parse_choice_letter(answer(method, Query{render_mcq_prompt(item), {}}, snapshot, seed).text);
}

}  // namespace unlearn
