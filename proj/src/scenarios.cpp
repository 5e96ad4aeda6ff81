#include "unlearn/scenarios.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/forget_store.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/parallel.hpp"
#include "unlearn/pipeline.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

constexpr std::string_view kScenarioBackend = "scenario";

std::string describe(const PipelineOutcome& o) {
  const auto& t = o.trace;
  std::string s = "stages [" + text::join(t.stages, ", ") + "]";
  s += ", detected [" + text::join(t.detected_ids, ", ") + "]";
  if (t.mean_score) s += ", mean " + std::to_string(*t.mean_score);
  if (t.failure_stage) s += ", failed at " + *t.failure_stage + ": " + t.failure;
  s += ", " + std::to_string(t.backend_calls) + " backend calls";
  return s;
}

std::string branch_of(const PipelineOutcome& o) {
  if (o.is_null) return "null_response";
  if (o.trace.short_circuit) return "vanilla_passthrough";
  return "composed_without_targets";
}

}  // namespace

std::string_view to_string(ScenarioExpectation e) {
  switch (e) {
    case ScenarioExpectation::kComposedWithoutTargets: return "composed_without_targets";
    case ScenarioExpectation::kNullResponse: return "null_response";
    case ScenarioExpectation::kVanillaPassthrough: return "vanilla_passthrough";
  }
  return "unknown";
}

ScenarioExpectation parse_expectation(std::string_view name) {
  for (auto e : {ScenarioExpectation::kComposedWithoutTargets, ScenarioExpectation::kNullResponse,
                 ScenarioExpectation::kVanillaPassthrough}) {
    if (to_string(e) == name) return e;
  }
  throw ValidationError("unknown expectation '" + std::string(name) + "'");
}

void validate(const Scenario& s) {
  if (text::trim(s.name).empty()) throw ValidationError("scenario name must be non-empty");
  if (text::trim(s.query).empty()) throw ValidationError("scenario '" + s.name + "' has no query");
  if (s.expected == ScenarioExpectation::kVanillaPassthrough && s.expected_backend_calls != 2) {
    throw ValidationError("scenario '" + s.name + "': a passthrough takes exactly 2 backend calls");
  }
  if (s.expected != ScenarioExpectation::kVanillaPassthrough && s.expected_backend_calls < 3) {
    throw ValidationError("scenario '" + s.name + "': a filtered run takes at least 3 backend calls");
  }
}

Scenario parse_scenario(std::string_view json_text) {
  Scenario s;
  try {
    const Json j = Json::parse(json_text);
    s.name = j.at("name").get<std::string>();
    const auto script = parse_scripted_script(
        Json{{"rules", j.at("rules")}, {"fallback", j.value("fallback", std::string{})}}.dump());
    s.rules = script.rules;
    s.fallback = script.fallback;
    s.forget_names = j.at("forget_names").get<std::vector<std::string>>();
    s.query = j.at("query").get<std::string>();
    s.expected = parse_expectation(j.at("expected").get<std::string>());
    s.expected_backend_calls = j.at("expected_backend_calls").get<int>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("scenario directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

ScenarioVerdict run_scenario(const Scenario& s, PipelineConfig config) {
  validate(s);
  auto backend = std::make_shared<ScriptedBackend>(s.rules, s.fallback);
  BackendRegistry registry;
  registry.add(std::string(kScenarioBackend), backend);
  config.backend_routes.clear();
  config.default_backend = kScenarioBackend;

  ForgetStore store;
  for (const auto& name : s.forget_names) store.add_target(name);
  const auto snapshot = store.snapshot();

  const Pipeline pipeline(registry, config);
  ScenarioVerdict v;
  v.outcome = pipeline.run(Query{s.query, {}}, snapshot);
  const auto& o = v.outcome;

  auto fail = [&](std::string why) {
    v.pass = false;
    v.reason = std::move(why) + " (" + describe(o) + ")";
    return v;
  };
  const std::string expected(to_string(s.expected));
  if (branch_of(o) != expected) return fail("expected " + expected + ", got " + branch_of(o));
  if (s.expected == ScenarioExpectation::kVanillaPassthrough) {
    if (!o.trace.vanilla_text || o.final_text != *o.trace.vanilla_text) {
      return fail("passthrough text differs from the vanilla text");
    }
  } else if (leaks(o.final_text, snapshot)) {
    return fail("final text names a forget target");
  }
  if (o.trace.backend_calls != s.expected_backend_calls ||
      backend->calls() != static_cast<std::uint64_t>(s.expected_backend_calls)) {
    return fail("expected " + std::to_string(s.expected_backend_calls) + " backend calls, got " +
                std::to_string(backend->calls()));
  }
  v.pass = true;
  return v;
}

SuiteReport run_suite(const std::vector<Scenario>& scenarios, const PipelineConfig& config,
                      int max_parallel) {
  SuiteReport report;
  report.verdicts.resize(scenarios.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    tasks.emplace_back([&, i] {
      try {
        report.verdicts[i] = run_scenario(scenarios[i], config);
      } catch (const std::exception& e) {
        report.verdicts[i].pass = false;
        report.verdicts[i].reason = e.what();
      }
    });
  }
  run_bounded(tasks, max_parallel);

  std::vector<PipelineOutcome> unrelated;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& v = report.verdicts[i];
    report.passed += v.pass;
    if (scenarios[i].expected == ScenarioExpectation::kVanillaPassthrough) {
      ++report.unrelated_scenarios;
      unrelated.push_back(v.outcome);
      continue;
    }
    ++report.leak_scenarios;
    ForgetStore store;
    for (const auto& n : scenarios[i].forget_names) store.add_target(n);
    report.leak_count += count_leaks({v.outcome.final_text}, store.snapshot());
  }
  report.false_positive_count = count_false_positives(unrelated);
  return report;
}

}  // namespace unlearn
