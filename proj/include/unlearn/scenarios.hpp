#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"

namespace unlearn {

enum class ScenarioExpectation { kComposedWithoutTargets, kNullResponse, kVanillaPassthrough };

std::string_view to_string(ScenarioExpectation e);
ScenarioExpectation parse_expectation(std::string_view name);

/// A self-contained pipeline run: scripted rules for every agent, the forget
/// set, one query and the branch it must take.
struct Scenario {
  std::string name;
  std::vector<ScriptedRule> rules;
  std::string fallback;
  std::vector<std::string> forget_names;
  std::string query;
  ScenarioExpectation expected = ScenarioExpectation::kVanillaPassthrough;
  int expected_backend_calls = 0;
};

// Throws ValidationError: passthrough takes exactly 2 calls, any other
// branch at least 3; names and query non-empty.
void validate(const Scenario& s);

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
// Every *.json file in `dir`, in file-name order.
std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir);

struct ScenarioVerdict {
  bool pass = false;
  std::string reason;  // empty on pass
  PipelineOutcome outcome;
};

/// Runs the pipeline against the scenario's own scripted backend (every
/// agent routed to it) and checks the branch, leak-freedom of composed and
/// null results, byte-equality of passthroughs and the backend call count.
ScenarioVerdict run_scenario(const Scenario& s, PipelineConfig config = {});

struct SuiteReport {
  std::vector<ScenarioVerdict> verdicts;  // same order as the input
  std::size_t passed = 0;
  std::size_t leak_scenarios = 0;
  std::size_t unrelated_scenarios = 0;
  // Leaking final texts among composed/null outcomes.
  std::size_t leak_count = 0;
  // Unrelated scenarios whose answer was nulled or altered.
  std::size_t false_positive_count = 0;
};

SuiteReport run_suite(const std::vector<Scenario>& scenarios, const PipelineConfig& config = {},
                      int max_parallel = 8);

}  // namespace unlearn
