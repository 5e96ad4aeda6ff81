#include "unlearn/baselines.hpp"

#include <fstream>

#include "unlearn/errors.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/random.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {

std::string render_guardrail_prompt(const Query& query, const ForgetSnapshot& snapshot) {
  return render(kGuardrailTemplate,
                PromptVars{{"unlearning_targets", text::join(snapshot.canonical_names(), ", ")},
                           {"question", query.text}});
}

std::string guardrail_respond(const Query& query, const ForgetSnapshot& snapshot,
                              const BackendRegistry& backends, std::string_view backend_id,
                              double temperature) {
  validate(query);
  ChatRequest req;
  req.temperature = temperature;
  req.messages.push_back({Role::kSystem, render_guardrail_prompt(query, snapshot)});
  return backends.complete(backend_id, req);
}

ChatRequest build_icul_context(const std::vector<IculExample>& forget_examples,
                               const std::vector<IculExample>& normal_examples,
                               const Query& query, std::uint64_t seed) {
  validate(query);
  auto check = [](const IculExample& e) {
    if (text::trim(e.input).empty() || text::trim(e.label).empty()) {
      throw ValidationError("icul example input and label must be non-empty");
    }
  };
  for (const auto& e : forget_examples) {
    check(e);
    if (!e.is_forget) throw ValidationError("forget example '" + e.input + "' is not marked is_forget");
  }
  for (const auto& e : normal_examples) {
    check(e);
    if (e.is_forget) throw ValidationError("normal example '" + e.input + "' is marked is_forget");
  }

  std::vector<const IculExample*> all;
  for (const auto& e : forget_examples) all.push_back(&e);
  for (const auto& e : normal_examples) all.push_back(&e);

  Rng rng(seed);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < forget_examples.size(); ++i) {
    std::vector<const std::string*> others;
    for (std::size_t o = 0; o < all.size(); ++o) {
      if (o != i && all[o]->label != forget_examples[i].label) others.push_back(&all[o]->label);
    }
    const std::string flipped = others.empty()
                                    ? std::string(kIculUnknownLabel)
                                    : *others[uniform_index(rng, others.size())];
    lines.push_back(forget_examples[i].input + " " + flipped);
  }
  for (const auto& e : normal_examples) lines.push_back(e.input + " " + e.label);
  lines.push_back(query.text);

  ChatRequest req;
  req.temperature = 0.0;
  req.messages.push_back({Role::kUser, text::join(lines, "\n")});
  return req;
}

std::vector<IculExample> load_icul_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open icul pool " + path.string());
  std::vector<IculExample> pool;
  try {
    for (const auto& e : Json::parse(in)) {
      pool.push_back({e.at("input").get<std::string>(), e.at("label").get<std::string>(),
                      e.value("is_forget", false)});
    }
  } catch (const Json::exception& e) {
    throw ParseError("icul pool " + path.string() + ": " + e.what());
  }
  return pool;
}

IculSplit icul_examples_for(const ForgetSnapshot& snapshot, const std::vector<IculExample>& pool) {
  IculSplit split;
  std::vector<bool> covered(snapshot.size(), false);
  for (const auto& e : pool) {
    if (!e.is_forget) {
      split.normal.push_back(e);
      continue;
    }
    const auto tokens = text::tokenize(e.input);
    bool relevant = false;
    for (std::size_t t = 0; t < snapshot.size(); ++t) {
      for (const auto& name : snapshot.targets()[t].names()) {
        if (text::contains_token_sequence(tokens, text::tokenize(name))) {
          covered[t] = true;
          relevant = true;
        }
      }
    }
    if (relevant) split.forget.push_back(e);
  }
  for (std::size_t t = 0; t < snapshot.size(); ++t) {
    if (covered[t]) continue;
    const auto& name = snapshot.targets()[t].canonical_name;
    split.forget.push_back({"Who is " + name + "?", name, true});
  }
  return split;
}

std::string icul_respond(const Query& query, const ForgetSnapshot& snapshot,
                         const std::vector<IculExample>& pool, const BackendRegistry& backends,
                         std::string_view backend_id, std::uint64_t seed) {
  const auto split = icul_examples_for(snapshot, pool);
  return backends.complete(backend_id, build_icul_context(split.forget, split.normal, query, seed));
}

}  // namespace unlearn
