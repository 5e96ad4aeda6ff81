// unlearnctl: serve the gateway, run single queries, manage targets, and run
// harness experiments.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or dataset error.
// Option precedence: command-line flag > environment variable > config file.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/gateway.hpp"
#include "unlearn/harness.hpp"
#include "unlearn/methods.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/serialization.hpp"

namespace {

using namespace unlearn;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct ConfigFailure {
  std::string what;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string out;
};

// Runs `fn`, turning load-time errors into ConfigFailure.
template <typename F>
auto loading(F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigFailure{e.what()};
  } catch (const ParseError& e) {
    throw ConfigFailure{e.what()};
  } catch (const ValidationError& e) {
    throw ConfigFailure{e.what()};
  }
}

ServiceConfig service_config(const Options& o) {
  if (o.config.empty()) throw ConfigFailure{"no service config (use --config or UNLEARN_CONFIG)"};
  return loading([&] {
    auto c = load_service_config(o.config);
    if (o.seed) c.pipeline.random_seed = *o.seed;
    return c;
  });
}

std::unique_ptr<Service> make_service(const ServiceConfig& c) {
  return loading([&] { return std::make_unique<Service>(c); });
}

int cmd_serve(const Options& o, const std::string& host, int port) {
  auto c = service_config(o);
  if (!host.empty()) c.host = host;
  if (port >= 0) c.port = port;
  auto service = make_service(c);
  if (!serve(*service, c.host, c.port)) {
    std::cerr << "error: cannot listen on " << c.host << ":" << c.port << "\n";
    return kExitRuntime;
  }
  return 0;
}

int cmd_run(const Options& o, const std::string& query) {
  const auto c = service_config(o);
  auto service = make_service(c);
  const Method method =
      loading([&] { return o.method.empty() ? Method::kAlu : parse_method(o.method); });
  PromptSet prompts = loading([&] {
    return c.prompt_dir ? PromptSet::load_dir(*c.prompt_dir) : PromptSet::defaults();
  });
  std::vector<IculExample> pool;
  if (c.icul_pool) pool = loading([&] { return load_icul_pool(*c.icul_pool); });
  const MethodRunner runner(service->backends(), c.pipeline, std::move(prompts), std::move(pool));

  const auto snapshot = service->store().snapshot();
  const auto answer = runner.answer(method, Query{query, {}}, snapshot, c.pipeline.random_seed);
  const std::string trace_path = o.out.empty() ? "unlearn_trace.json" : o.out;
  Json trace = {{"method", to_string(method)},
                {"query", query},
                {"snapshot_version", snapshot.version()},
                {"final_text", answer.text}};
  if (answer.outcome) trace["outcome"] = *answer.outcome;
  std::ofstream(trace_path, std::ios::binary) << trace.dump(2) << "\n";

  const bool is_null = answer.outcome && answer.outcome->is_null;
  std::cout << answer.text << "\n"
            << "null_response: " << (is_null ? "true" : "false") << "\n"
            << "trace: " << trace_path << "\n";
  return 0;
}

int cmd_targets(const Options& o, const std::string& verb, const std::vector<std::string>& args,
                const std::vector<std::string>& aliases) {
  const auto c = service_config(o);
  if (!c.store_path) throw ConfigFailure{"service config has no store_path"};
  ForgetStore store(*c.store_path);
  if (verb == "add") {
    if (args.size() != 1) throw ConfigFailure{"targets add takes exactly one name"};
    const auto t = store.add_target(args[0], aliases);
    std::cout << t.id << "\t" << t.canonical_name << "\n"
              << "version: " << store.version() << "\n";
  } else if (verb == "remove") {
    if (args.size() != 1) throw ConfigFailure{"targets remove takes exactly one id"};
    const auto t = store.remove_target(args[0]);
    std::cout << "removed " << t.id << "\t" << t.canonical_name << "\n"
              << "version: " << store.version() << "\n";
  } else {
    const auto snap = store.snapshot();
    for (const auto& t : snap.targets()) {
      std::cout << t.id << "\t" << t.canonical_name;
      for (const auto& a : t.aliases) std::cout << "\t" << a;
      std::cout << "\n";
    }
    std::cout << "version: " << snap.version() << "\n";
  }
  return 0;
}

int cmd_eval(const Options& o, const std::string& experiment_path) {
  auto cfg = loading([&] { return load_experiment_config(experiment_path); });
  if (o.seed) cfg.seed = *o.seed;
  if (!o.method.empty()) cfg.method = loading([&] { return parse_method(o.method); });
  if (!o.out.empty()) cfg.output = o.out;
  if (cfg.service_config.empty() && !o.config.empty()) cfg.service_config = o.config;
  if (cfg.service_config.empty()) throw ConfigFailure{"experiment names no service_config"};
  const auto sc = loading([&] { return load_service_config(cfg.service_config); });
  const auto backends = loading([&] { return build_backends(sc); });
  // Fail on unreadable datasets before any backend work.
  loading([&] { return load_qa_dataset(cfg.qa_dataset).size(); });
  if (cfg.mcq_dataset) loading([&] { return load_mcq_dataset(*cfg.mcq_dataset).size(); });

  ForgetStore store;
  const auto report = run_experiment(cfg, *backends, store);
  std::cout << kCsvHeader << "\n" << csv_row(cfg, report) << "\n";
  if (report.mcq_accuracy) std::printf("mcq_accuracy: %.4f\n", *report.mcq_accuracy);
  return 0;
}

int cmd_mcq(const Options& o, const std::string& dataset_path) {
  const auto c = service_config(o);
  auto service = make_service(c);
  const auto items = loading([&] { return load_mcq_dataset(dataset_path); });
  if (items.empty()) throw ConfigFailure{"mcq dataset " + dataset_path + " is empty"};
  const Method method =
      loading([&] { return o.method.empty() ? Method::kAlu : parse_method(o.method); });
  const MethodRunner runner(service->backends(), c.pipeline);
  const auto snapshot = service->store().snapshot();
  std::vector<int> predictions, answers;
  for (std::size_t i = 0; i < items.size(); ++i) {
    predictions.push_back(runner.answer_mcq(method, items[i], snapshot, i).value_or(-1));
    answers.push_back(items[i].answer_index);
  }
  const double acc = mcq_accuracy(predictions, answers);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) correct += predictions[i] == answers[i];
  std::printf("accuracy: %.4f (%zu/%zu)\n", acc, correct, items.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference-time unlearning gateway and evaluation tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config, "Service config file")->envname("UNLEARN_CONFIG");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed override")->envname("UNLEARN_SEED");
  app.add_option("--method", opts.method, "alu, alu_ablated, guardrail, icul or vanilla")
      ->envname("UNLEARN_METHOD");
  app.add_option("--out", opts.out, "Output path (trace file or report directory)")
      ->envname("UNLEARN_OUT");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP gateway until signalled");
  std::string host;
  int port = -1;
  serve_cmd->add_option("--host", host, "Listen address override");
  serve_cmd->add_option("--port", port, "Listen port override");

  auto* run_cmd = app.add_subcommand("run", "Answer one query and print the outcome");
  std::string query;
  run_cmd->add_option("query", query, "Query text")->required();

  auto* targets_cmd = app.add_subcommand("targets", "Manage the persistent forget set");
  std::string verb;
  std::vector<std::string> target_args, aliases;
  targets_cmd->add_option("verb", verb, "add, remove or list")
      ->required()
      ->check(CLI::IsMember({"add", "remove", "list"}));
  targets_cmd->add_option("args", target_args, "Name (add) or id (remove)");
  targets_cmd->add_option("--alias", aliases, "Alias for add (repeatable)");

  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment and write its reports");
  std::string experiment;
  eval_cmd->add_option("experiment", experiment, "Experiment config file")->required();

  auto* mcq_cmd = app.add_subcommand("mcq", "Multiple-choice accuracy over a dataset");
  std::string dataset;
  mcq_cmd->add_option("dataset", dataset, "MCQ dataset (JSON lines)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) opts.seed = seed;
  spdlog::set_level(serve_cmd->parsed() ? spdlog::level::info : spdlog::level::warn);

  try {
    if (serve_cmd->parsed()) return cmd_serve(opts, host, port);
    if (run_cmd->parsed()) return cmd_run(opts, query);
    if (targets_cmd->parsed()) return cmd_targets(opts, verb, target_args, aliases);
    if (eval_cmd->parsed()) return cmd_eval(opts, experiment);
    if (mcq_cmd->parsed()) return cmd_mcq(opts, dataset);
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.what << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
