#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <tuple>

#include "unlearn/baselines.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/gateway.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/scenarios.hpp"
#include "unlearn/text.hpp"

namespace py = pybind11;
using namespace unlearn;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
using JsonReply = std::tuple<int, std::string>;

JsonReply reply(const ApiResult& r) { return {r.status, r.body.dump()}; }

ForgetSnapshot snapshot_of(const std::vector<std::string>& names) {
  ForgetSet set;
  int n = 0;
  for (const auto& name : names) set.add(UnlearnTarget{"t" + std::to_string(++n), name, {}, 0});
  return ForgetSnapshot(std::move(set));
}

std::string suite_summary(const std::string& dir) {
  const auto scenarios = load_scenario_dir(dir);
  const auto report = run_suite(scenarios);
  Json failures = Json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (!report.verdicts[i].pass) {
      failures.push_back({{"name", scenarios[i].name}, {"reason", report.verdicts[i].reason}});
    }
  }
  return Json{{"total", scenarios.size()},
              {"passed", report.passed},
              {"leak_scenarios", report.leak_scenarios},
              {"unrelated_scenarios", report.unrelated_scenarios},
              {"leak_count", report.leak_count},
              {"false_positive_count", report.false_positive_count},
              {"failures", failures}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the unlearning gateway";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("tokenize", [](const std::string& s) { return text::tokenize(s); });
  m.def("lcs_length", &lcs_length);
  m.def(
      "rouge_l",
      [](const std::string& candidate, const std::string& reference) {
        const auto s = rouge_l(candidate, reference);
        return std::make_tuple(s.precision, s.recall, s.f);
      },
      py::arg("candidate"), py::arg("reference"));
  m.def("f_score", &f_score, py::arg("forget_rouge"), py::arg("retain_rouge"));
  m.def(
      "leaks",
      [](const std::string& response, const std::vector<std::string>& names) {
        return leaks(response, snapshot_of(names));
      },
      py::arg("response"), py::arg("names"));
  m.def(
      "render_guardrail_prompt",
      [](const std::string& query, const std::vector<std::string>& names) {
        return render_guardrail_prompt(Query{query, {}}, snapshot_of(names));
      },
      py::arg("query"), py::arg("names"));
  m.def("run_scenario_suite", &suite_summary, py::arg("directory"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<Service>(m, "Service")
      .def(py::init([](const std::string& config_path) {
             return std::make_unique<Service>(load_service_config(config_path));
           }),
           py::arg("config_path"))
      .def(
          "chat",
          [](Service& s, const std::string& body) { return reply(s.handle_chat(body)); },
          py::call_guard<py::gil_scoped_release>())
      .def("create_target",
           [](Service& s, const std::string& auth, const std::string& body) {
             return reply(s.handle_create_target(auth, body));
           })
      .def("delete_target",
           [](Service& s, const std::string& auth, const std::string& id) {
             return reply(s.handle_delete_target(auth, id));
           })
      .def("list_targets",
           [](Service& s, const std::string& auth) { return reply(s.handle_list_targets(auth)); })
      .def("health", [](Service& s) { return reply(s.handle_health()); })
      .def("config", [](const Service& s) { return reply(s.handle_config()); });
}
