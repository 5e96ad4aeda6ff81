#include "unlearn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <functional>
#include <future>
#include <regex>
#include <set>

#include "unlearn/errors.hpp"
#include "unlearn/parallel.hpp"
#include "unlearn/random.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string strip_decoration(std::string_view s) {
  std::string t = text::trim(s);
  // Leading list markers: "-", "*", "•", "1.", "2)".
  std::size_t i = 0;
  while (i < t.size() && (t[i] == '-' || t[i] == '*' || t[i] == ' ')) ++i;
  std::size_t d = i;
  while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
  if (d > i && d < t.size() && (t[d] == '.' || t[d] == ')')) i = d + 1;
  t = text::trim(std::string_view(t).substr(i));
  const std::string_view junk = "`'\"[]().:!?* ";
  auto first = t.find_first_not_of(junk);
  if (first == std::string::npos) return {};
  auto last = t.find_last_not_of(junk);
  return t.substr(first, last - first + 1);
}

std::string target_names(const UnlearnTarget& t) { return text::join(t.names(), ", "); }

std::string detected_names(const DetectedTargets& detected, const ForgetSnapshot& snapshot) {
  std::vector<std::string> parts;
  for (const auto& id : detected.ids) {
    if (const auto* t = snapshot.find(id)) parts.push_back(target_names(*t));
  }
  return text::join(parts, ", ");
}

std::string numbered(const std::vector<SanitizedVariant>& variants) {
  std::string out;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (i) out += "\n";
    out += std::to_string(i + 1) + ". " + variants[i].text;
  }
  return out;
}

}  // namespace

DetectionResult parse_detection(std::string_view completion, const ForgetSnapshot& snapshot) {
  DetectionResult result;
  result.raw = std::string(completion);
  if (text::iequals(strip_decoration(completion), "none")) return result;

  static const std::regex separators(R"([\n,;]|\s+and\s+)", std::regex::icase);
  const std::string s(completion);
  std::set<std::string> found;
  for (std::sregex_token_iterator it(s.begin(), s.end(), separators, -1), end; it != end; ++it) {
    const std::string piece = strip_decoration(it->str());
    if (piece.empty() || text::iequals(piece, "none")) continue;
    if (const auto* t = snapshot.find_by_name(piece)) {
      found.insert(t->id);
      continue;
    }
    // Prose such as "The response mentions Hermione Granger": look for whole
    // name token runs inside the piece.
    const auto tokens = text::tokenize(piece);
    bool hit = false;
    for (const auto& t : snapshot.targets()) {
      for (const auto& name : t.names()) {
        if (text::contains_token_sequence(tokens, text::tokenize(name))) {
          found.insert(t.id);
          hit = true;
          break;
        }
      }
    }
    if (!hit) result.discarded_names.push_back(piece);
  }
  for (const auto& t : snapshot.targets()) {
    if (found.count(t.id)) result.targets.ids.push_back(t.id);
  }
  result.unparseable = result.targets.empty();
  return result;
}

std::optional<int> parse_score(std::string_view completion) {
  std::size_t i = 0;
  while (i < completion.size()) {
    if (!std::isdigit(static_cast<unsigned char>(completion[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < completion.size() && std::isdigit(static_cast<unsigned char>(completion[j]))) ++j;
    if (j - i == 1 && completion[i] >= '1' && completion[i] <= '5') return completion[i] - '0';
    i = j;
  }
  return std::nullopt;
}

std::optional<int> parse_choice_letter(std::string_view completion) {
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 0; i < completion.size(); ++i) {
    const char c = completion[i];
    if (c < 'A' || c > 'D') continue;
    const bool left_ok = i == 0 || !is_word(completion[i - 1]);
    const bool right_ok = i + 1 == completion.size() || !is_word(completion[i + 1]);
    if (left_ok && right_ok) return c - 'A';
  }
  return std::nullopt;
}

TopJ select_top_j(const std::vector<CriticRating>& ratings,
                  const std::vector<SanitizedVariant>& variants, int j) {
  if (j < 1) throw ValidationError("j must be >= 1");
  if (ratings.size() < static_cast<std::size_t>(j)) {
    throw ValidationError("only " + std::to_string(ratings.size()) + " rated variants, need " +
                          std::to_string(j));
  }
  std::vector<const CriticRating*> order;
  for (const auto& r : ratings) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const CriticRating* a, const CriticRating* b) {
    if (a->aggregate != b->aggregate) return a->aggregate > b->aggregate;
    return a->variant_index < b->variant_index;
  });

  TopJ top;
  int sum = 0;
  for (int i = 0; i < j; ++i) {
    const auto* r = order[static_cast<std::size_t>(i)];
    auto it = std::find_if(variants.begin(), variants.end(),
                           [&](const SanitizedVariant& v) { return v.index == r->variant_index; });
    if (it == variants.end()) {
      throw ValidationError("rating for unknown variant " + std::to_string(r->variant_index));
    }
    top.selected.push_back(*it);
    sum += r->aggregate;
  }
  top.mean = static_cast<double>(sum) / j;
  return top;
}

Pipeline::Pipeline(const BackendRegistry& backends, PipelineConfig config, PromptSet prompts)
    : backends_(backends),
      config_(std::move(config)),
      prompts_(prompts.with_overrides(config_.prompt_overrides)) {
  validate(config_);
}

std::string Pipeline::call(Agent agent, const ChatRequest& request, PipelineTrace* trace) const {
  if (trace) std::atomic_ref<int>(trace->backend_calls).fetch_add(1);
  return backends_.complete(config_.backend_for(agent), request);
}

VanillaResponse Pipeline::run_vanilla(const Query& query, PipelineTrace* trace) const {
  validate(query);
  const auto req = build_request(prompts_.get(Agent::kVanilla), {{"query", query.text}},
                                 config_.temperature_for(Agent::kVanilla), query.history);
  try {
    return VanillaResponse{call(Agent::kVanilla, req, trace)};
  } catch (const std::exception& e) {
    throw StageError("vanilla", e.what());
  }
}

DetectionResult Pipeline::detect_targets(const VanillaResponse& vanilla, const Query& query,
                                         const ForgetSnapshot& snapshot,
                                         PipelineTrace* trace) const {
  const PromptVars vars{{"query", query.text},
                        {"vanilla_response", vanilla.text},
                        {"unlearning_targets", text::join(snapshot.canonical_names(), ", ")}};
  const auto req = build_request(prompts_.get(Agent::kAuditDetect), vars,
                                 config_.temperature_for(Agent::kAuditDetect));
  std::string raw;
  try {
    raw = call(Agent::kAuditDetect, req, trace);
  } catch (const std::exception& e) {
    throw StageError("audit_detect", e.what());
  }
  auto result = parse_detection(raw, snapshot);
  if (trace) {
    trace->detect_raw = result.raw;
    trace->detected_ids = result.targets.ids;
    trace->discarded_names = result.discarded_names;
    trace->detect_unparseable = result.unparseable && !text::iequals(strip_decoration(raw), "none");
  }
  return result;
}

VariantBatch Pipeline::generate_variants(const VanillaResponse* vanilla, const Query& query,
                                         const DetectedTargets& detected,
                                         const ForgetSnapshot& snapshot,
                                         PipelineTrace* trace) const {
  if (detected.empty()) throw ValidationError("generate_variants needs detected targets");
  const auto& templ = prompts_.get(Agent::kAuditErase);
  const std::string names = detected_names(detected, snapshot);
  const int k = config_.k;

  std::vector<std::optional<std::string>> texts(static_cast<std::size_t>(k));
  std::vector<std::string> errors(static_cast<std::size_t>(k));
  std::vector<std::function<void()>> tasks;
  for (int i = 1; i <= k; ++i) {
    const PromptVars vars{{"query", query.text},
                          {"vanilla_response", vanilla ? vanilla->text : std::string()},
                          {"unlearning_targets", names},
                          {"variant_index", std::to_string(i)},
                          {"variant_count", std::to_string(k)}};
    auto req = build_request(templ, vars, config_.temperature_for(Agent::kAuditErase));
    tasks.emplace_back([this, req = std::move(req), i, &texts, &errors, trace] {
      const auto slot = static_cast<std::size_t>(i - 1);
      try {
        texts[slot] = call(Agent::kAuditErase, req, trace);
      } catch (const std::exception& e) {
        errors[slot] = e.what();
      }
    });
  }
  run_bounded(tasks, config_.max_parallel);

  // Survivors are numbered 1..n in issue order; failures keep their issue slot.
  VariantBatch batch;
  int next = 1;
  for (int i = 1; i <= k; ++i) {
    const auto slot = static_cast<std::size_t>(i - 1);
    if (texts[slot]) {
      batch.variants.push_back(SanitizedVariant{next++, *texts[slot], detected});
    } else {
      batch.failures.push_back(VariantFailure{i, errors[slot]});
    }
  }
  if (trace) {
    trace->variants = batch.variants;
    trace->variant_failures = batch.failures;
  }
  if (batch.variants.size() < static_cast<std::size_t>(config_.j)) {
    throw StageError("audit_erase", std::to_string(batch.variants.size()) + " of " +
                                        std::to_string(k) + " erase calls succeeded, need " +
                                        std::to_string(config_.j));
  }
  return batch;
}

RatingResult Pipeline::rate_variant(const SanitizedVariant& variant,
                                    const DetectedTargets& detected,
                                    const ForgetSnapshot& snapshot, PipelineTrace* trace) const {
  return rate_all({variant}, detected, snapshot, trace).front();
}

std::vector<RatingResult> Pipeline::rate_all(const std::vector<SanitizedVariant>& variants,
                                             const DetectedTargets& detected,
                                             const ForgetSnapshot& snapshot,
                                             PipelineTrace* trace) const {
  if (detected.empty()) throw ValidationError("rating needs detected targets");
  const auto& templ = prompts_.get(Agent::kCritic);
  const std::size_t per = detected.ids.size();

  struct Cell {
    std::optional<int> score;
    std::string error;
    std::string raw;
  };
  std::vector<Cell> cells(variants.size() * per);
  std::vector<std::function<void()>> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t t = 0; t < per; ++t) {
      const auto* target = snapshot.find(detected.ids[t]);
      if (!target) throw ValidationError("detected id '" + detected.ids[t] + "' not in snapshot");
      const PromptVars vars{{"unlearning_targets", target_names(*target)},
                            {"responses", "1. " + variants[v].text},
                            {"ratings", ""}};
      auto req = build_request(templ, vars, config_.temperature_for(Agent::kCritic));
      Cell& cell = cells[v * per + t];
      tasks.emplace_back([this, req = std::move(req), &cell, trace] {
        try {
          cell.raw = call(Agent::kCritic, req, trace);
          cell.score = parse_score(cell.raw);
          if (!cell.score) cell.error = "no score 1-5 in critic output";
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      });
    }
  }
  run_bounded(tasks, config_.max_parallel);

  std::vector<RatingResult> results(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::map<std::string, int> scores;
    for (std::size_t t = 0; t < per; ++t) {
      const Cell& cell = cells[v * per + t];
      if (cell.score) {
        scores[detected.ids[t]] = *cell.score;
      } else {
        results[v].errors.push_back(
            RatingError{variants[v].index, detected.ids[t], cell.error, cell.raw});
      }
    }
    if (results[v].errors.empty()) results[v].rating = make_rating(variants[v].index, scores);
  }
  if (trace) {
    for (const auto& r : results) {
      if (r.rating) trace->ratings.push_back(*r.rating);
      trace->rating_errors.insert(trace->rating_errors.end(), r.errors.begin(), r.errors.end());
    }
  }
  return results;
}

PipelineOutcome Pipeline::null_outcome(PipelineOutcome outcome, const std::string& stage,
                                       const std::string& why) const {
  outcome.final_text = config_.null_response;
  outcome.is_null = true;
  if (!stage.empty()) {
    outcome.trace.failure_stage = stage;
    outcome.trace.failure = why;
  }
  return outcome;
}

PipelineOutcome Pipeline::compose_final(const std::vector<SanitizedVariant>& selected, double mean,
                                        const ForgetSnapshot& snapshot,
                                        PipelineOutcome outcome) const {
  auto& trace = outcome.trace;
  trace.mean_score = mean;
  trace.selected_indices.clear();
  for (const auto& v : selected) trace.selected_indices.push_back(v.index);

  if (selected.empty() || !(mean >= config_.threshold)) {
    return null_outcome(std::move(outcome), "", "");
  }

  DetectedTargets detected{trace.detected_ids};
  std::string names = detected.empty() ? text::join(snapshot.canonical_names(), ", ")
                                       : detected_names(detected, snapshot);
  std::string ratings;
  for (const auto& v : selected) {
    for (const auto& r : trace.ratings) {
      if (r.variant_index == v.index) {
        ratings += "Response " + std::to_string(v.index) + ": " + std::to_string(r.aggregate) + "\n";
      }
    }
  }
  const PromptVars vars{{"unlearning_targets", names},
                        {"responses", numbered(selected)},
                        {"ratings", ratings}};
  const auto req = build_request(prompts_.get(Agent::kComposer), vars,
                                 config_.temperature_for(Agent::kComposer));
  trace.stages.push_back("composer");
  try {
    std::string composed = call(Agent::kComposer, req, &trace);
    trace.composer_raw = composed;
    outcome.final_text = std::move(composed);
    outcome.is_null = outcome.final_text == config_.null_response;
  } catch (const std::exception& e) {
    return null_outcome(std::move(outcome), "composer", e.what());
  }
  return outcome;
}

PipelineOutcome Pipeline::run(const Query& query, const ForgetSnapshot& snapshot) const {
  validate(query);
  PipelineOutcome outcome;
  auto& trace = outcome.trace;
  trace.snapshot_version = snapshot.version();
  trace.mode = config_.skip_vanilla ? "skip_vanilla" : "full";

  auto timed = [&](const char* stage, auto&& fn) {
    const auto start = Clock::now();
    trace.stages.emplace_back(stage);
    struct Record {
      PipelineOutcome& o;
      const char* s;
      Clock::time_point t;
      ~Record() { o.timings.push_back({s, millis_since(t)}); }
    } record{outcome, stage, start};
    return fn();
  };

  try {
    std::optional<VanillaResponse> vanilla;
    if (!config_.skip_vanilla) {
      vanilla = timed("vanilla", [&] { return run_vanilla(query, &trace); });
      trace.vanilla_text = vanilla->text;
    }

    const VanillaResponse screened = vanilla ? *vanilla : VanillaResponse{};
    const auto detection =
        timed("audit_detect", [&] { return detect_targets(screened, query, snapshot, &trace); });

    if (detection.targets.empty()) {
      trace.short_circuit = true;
      if (vanilla) {
        outcome.final_text = vanilla->text;
        outcome.is_null = outcome.final_text == config_.null_response;
        return outcome;
      }
      // Ablated mode has no vanilla text to pass through: one erase call
      // against the full target list answers the query directly.
      const PromptVars vars{{"query", query.text},
                            {"vanilla_response", ""},
                            {"unlearning_targets", text::join(snapshot.canonical_names(), ", ")},
                            {"variant_index", "1"},
                            {"variant_count", "1"}};
      const auto req = build_request(prompts_.get(Agent::kAuditErase), vars,
                                     config_.temperature_for(Agent::kAuditErase));
      outcome.final_text =
          timed("audit_erase", [&] { return call(Agent::kAuditErase, req, &trace); });
      outcome.is_null = outcome.final_text == config_.null_response;
      return outcome;
    }

    const auto batch = timed("audit_erase", [&] {
      return generate_variants(vanilla ? &*vanilla : nullptr, query, detection.targets, snapshot,
                               &trace);
    });

    const auto results = timed(
        "critic", [&] { return rate_all(batch.variants, detection.targets, snapshot, &trace); });
    std::vector<CriticRating> ratings;
    for (const auto& r : results) {
      if (r.rating) ratings.push_back(*r.rating);
    }

    if (ratings.size() < static_cast<std::size_t>(config_.j)) {
      trace.stages.emplace_back("select");
      return null_outcome(std::move(outcome), "select",
                          std::to_string(ratings.size()) + " rated variants, need " +
                              std::to_string(config_.j));
    }
    const auto top = timed("select", [&] { return select_top_j(ratings, batch.variants, config_.j); });

    const auto start = Clock::now();
    outcome = compose_final(top.selected, top.mean, snapshot, std::move(outcome));
    if (outcome.trace.composer_raw || outcome.trace.failure_stage) {
      outcome.timings.push_back({"composer", millis_since(start)});
    }
    return outcome;
  } catch (const StageError& e) {
    return null_outcome(std::move(outcome), e.stage(), e.what());
  } catch (const std::exception& e) {
    return null_outcome(std::move(outcome), trace.stages.empty() ? "pipeline" : trace.stages.back(),
                        e.what());
  }
}

McqOutcome Pipeline::run_mcq(const McqItem& item, const ForgetSnapshot& snapshot) const {
  validate(item);
  McqOutcome out;
  std::string screened = item.question;
  for (std::size_t i = 0; i < 4; ++i) {
    screened += "\n" + std::string(1, static_cast<char>('A' + i)) + ". " + item.choices[i];
  }
  try {
    out.detection = detect_targets(VanillaResponse{screened}, Query{item.question, {}}, snapshot);
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }

  if (!out.detection.targets.empty()) {
    std::uint64_t h = text::fnv1a(item.subject);
    h = text::fnv1a(screened, h);
    Rng rng(mix_seed(config_.random_seed, h));
    out.choice = static_cast<int>(uniform_index(rng, 4));
    out.bypassed = true;
    return out;
  }

  ChatRequest req;
  req.messages.push_back({Role::kUser, render_mcq_prompt(item)});
  req.temperature = 0.0;
  try {
    out.raw = call(Agent::kVanilla, req, nullptr);
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  out.choice = parse_choice_letter(out.raw);
  if (!out.choice) out.error = "no choice letter A-D in completion";
  return out;
}

}  // namespace unlearn
