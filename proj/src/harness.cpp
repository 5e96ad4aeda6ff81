#include "unlearn/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/parallel.hpp"
#include "unlearn/prompts.hpp"
#include "unlearn/random.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
void for_each_jsonl(const std::filesystem::path& path, F on_record) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), number);
    }
    try {
      on_record(record);
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), number);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(number) + ": " + path.string() + ": " + e.what());
    }
  }
}

std::string format_double(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

struct ItemRecord {
  std::string query;
  std::string vanilla;
  std::vector<std::string> answers;
  std::vector<Json> traces;
  std::optional<MetricScores> pre_ul;
  std::optional<MetricScores> post_ul;
  std::optional<MetricScores> retain;
  bool leaked = false;
  bool false_positive = false;
  double latency_ms = 0.0;
  std::string error;
};

// Dataset target names in first-seen order, case-insensitively distinct.
std::vector<std::string> dataset_targets(const std::vector<QaItem>& items) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& item : items) {
    for (const auto& n : item.target_names) {
      const auto name = text::trim(n);
      if (!name.empty() && seen.insert(text::to_lower(name)).second) names.push_back(name);
    }
  }
  return names;
}

std::vector<UnlearnTarget> as_targets(const std::vector<std::string>& names) {
  std::vector<UnlearnTarget> targets;
  for (std::size_t i = 0; i < names.size(); ++i) {
    targets.push_back(UnlearnTarget{"t" + std::to_string(i + 1), names[i], {}, 0});
  }
  return targets;
}

}  // namespace

std::string_view to_string(QaSplit split) {
  switch (split) {
    case QaSplit::kForget: return "forget";
    case QaSplit::kRetain: return "retain";
    case QaSplit::kUnrelated: return "unrelated";
  }
  return "unknown";
}

QaSplit parse_split(std::string_view name) {
  if (name == "forget") return QaSplit::kForget;
  if (name == "retain") return QaSplit::kRetain;
  if (name == "unrelated") return QaSplit::kUnrelated;
  throw ValidationError("unknown split '" + std::string(name) + "'");
}

void validate(const QaItem& item) {
  if (text::trim(item.question).empty()) throw ValidationError("question must be non-empty");
  if (item.split == QaSplit::kForget && item.target_names.empty()) {
    throw ValidationError("forget item '" + item.question + "' names no target");
  }
}

std::vector<QaItem> load_qa_dataset(const std::filesystem::path& path) {
  std::vector<QaItem> items;
  for_each_jsonl(path, [&](const Json& r) {
    QaItem item;
    item.question = r.at("question").get<std::string>();
    item.answer = r.at("answer").get<std::string>();
    item.target_names = r.value("target_names", std::vector<std::string>{});
    item.split = parse_split(r.at("split").get<std::string>());
    validate(item);
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<McqItem> load_mcq_dataset(const std::filesystem::path& path) {
  std::vector<McqItem> items;
  for_each_jsonl(path, [&](const Json& r) {
    McqItem item = r.get<McqItem>();
    validate(item);
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<QaPair> load_manyshot_pool(const std::filesystem::path& path) {
  std::vector<QaPair> pool;
  for_each_jsonl(path, [&](const Json& r) {
    pool.emplace_back(r.at("question").get<std::string>(), r.at("answer").get<std::string>());
  });
  return pool;
}

std::string build_manyshot_prefix(const std::vector<QaPair>& pool, std::size_t n,
                                  std::uint64_t seed) {
  if (n == 0) throw ValidationError("many-shot prefix needs at least one pair");
  if (n > pool.size()) {
    throw ValidationError("many-shot prefix of " + std::to_string(n) + " pairs from a pool of " +
                          std::to_string(pool.size()));
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
  }
  std::vector<std::string> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [q, a] = pool[order[i]];
    blocks.push_back("Q: " + q + "\nA: " + a);
  }
  return text::join(blocks, "\n\n");
}

std::string load_jailbreak_prefix(const std::filesystem::path& path) {
  std::string s = read_text(path);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.empty()) throw ConfigError("jailbreak prefix " + path.string() + " is empty");
  return s;
}

std::string_view to_string(Perturbation p) {
  switch (p) {
    case Perturbation::kNone: return "none";
    case Perturbation::kJailbreakPrefix: return "jailbreak_prefix";
    case Perturbation::kManyShot: return "many_shot";
    case Perturbation::kTargetListSparsity: return "target_list_sparsity";
  }
  return "unknown";
}

Perturbation parse_perturbation(std::string_view name) {
  for (auto p : {Perturbation::kNone, Perturbation::kJailbreakPrefix, Perturbation::kManyShot,
                 Perturbation::kTargetListSparsity}) {
    if (to_string(p) == name) return p;
  }
  throw ValidationError("unknown perturbation '" + std::string(name) + "'");
}

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const Json j = Json::parse(json_text);
    auto path_of = [&](const char* key) { return resolve(base_dir, j.at(key).get<std::string>()); };
    cfg.method = parse_method(j.value("method", std::string("alu")));
    cfg.dataset_name = j.value("dataset_name", cfg.dataset_name);
    cfg.qa_dataset = path_of("qa_dataset");
    if (j.contains("mcq_dataset")) cfg.mcq_dataset = path_of("mcq_dataset");
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("j")) cfg.j = j.at("j").get<int>();
    if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
    cfg.perturbation = parse_perturbation(j.value("perturbation", std::string("none")));
    if (j.contains("jailbreak_prefix")) cfg.jailbreak_prefix = path_of("jailbreak_prefix");
    if (j.contains("manyshot_pool")) cfg.manyshot_pool = path_of("manyshot_pool");
    cfg.manyshot_n = j.value("manyshot_n", cfg.manyshot_n);
    if (j.contains("dummy_names")) cfg.dummy_names = path_of("dummy_names");
    cfg.sparsity_total = j.value("sparsity_total", cfg.sparsity_total);
    if (j.contains("icul_pool")) cfg.icul_pool = path_of("icul_pool");
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("output")) cfg.output = path_of("output");
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.repeats = j.value("repeats", cfg.repeats);
    const auto agg = j.value("repeat_aggregation", std::string("max"));
    if (agg == "max") {
      cfg.repeat_aggregation = RepeatAggregation::kMax;
    } else if (agg == "mean") {
      cfg.repeat_aggregation = RepeatAggregation::kMean;
    } else {
      throw ValidationError("repeat_aggregation must be max or mean");
    }
    cfg.embedding_backend = j.value("embedding_backend", std::string{});
    cfg.record_latency = j.value("record_latency", cfg.record_latency);
    if (j.contains("service_config")) cfg.service_config = path_of("service_config");
    if (j.contains("prompt_dir")) cfg.prompt_dir = path_of("prompt_dir");
    if (j.contains("pipeline")) cfg.pipeline = j.at("pipeline").get<PipelineConfig>();
    if (cfg.repeats == 0) throw ValidationError("repeats must be >= 1");
    if (cfg.parallelism == 0) throw ValidationError("parallelism must be >= 1");
    validate(effective_pipeline(cfg));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text(path), path.parent_path());
}

PipelineConfig effective_pipeline(const ExperimentConfig& cfg) {
  PipelineConfig p = cfg.pipeline;
  if (cfg.k) p.k = *cfg.k;
  if (cfg.j) p.j = *cfg.j;
  if (cfg.threshold) p.threshold = *cfg.threshold;
  p.random_seed = cfg.seed;
  return p;
}

std::string csv_row(const ExperimentConfig& cfg, const MetricReport& r) {
  std::vector<std::string> cells = {
      std::string(to_string(cfg.method)),
      cfg.dataset_name,
      std::string(to_string(cfg.perturbation)),
      format_double(r.pre_ul.rouge_l),
      format_double(r.post_ul.rouge_l),
      format_double(r.retain.rouge_l),
      format_double(r.pre_ul.cosine),
      format_double(r.post_ul.cosine),
      format_double(r.retain.cosine),
      format_double(r.f_score),
      std::to_string(r.leak_count),
      std::to_string(r.false_positive_count),
      cfg.record_latency && r.timings.count("mean_latency_ms")
          ? format_double(r.timings.at("mean_latency_ms"), 3)
          : std::string{},
  };
  for (auto& c : cells) {
    if (c.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : c) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      c = quoted + "\"";
    }
  }
  return text::join(cells, ",");
}

MetricReport run_experiment(const ExperimentConfig& cfg, const BackendRegistry& backends,
                            ForgetStore& store) {
  const auto started = Clock::now();
  const auto items = load_qa_dataset(cfg.qa_dataset);
  if (items.empty()) throw ExperimentError("dataset " + cfg.qa_dataset.string() + " is empty");

  const auto pipeline_cfg = effective_pipeline(cfg);
  PromptSet prompts = cfg.prompt_dir ? PromptSet::load_dir(*cfg.prompt_dir) : PromptSet::defaults();
  std::vector<IculExample> icul_pool;
  if (!cfg.icul_pool.empty()) icul_pool = load_icul_pool(cfg.icul_pool);
  const MethodRunner runner(backends, pipeline_cfg, std::move(prompts), std::move(icul_pool));
  const std::string embed_backend = cfg.embedding_backend.empty()
                                        ? pipeline_cfg.backend_for(Agent::kVanilla)
                                        : cfg.embedding_backend;

  const auto real_names = dataset_targets(items);
  if (cfg.perturbation == Perturbation::kTargetListSparsity) {
    const auto pool = load_name_pool(cfg.dummy_names);
    store.replace_all(generate_sparse_set(real_names, pool, cfg.sparsity_total, cfg.seed).targets());
  } else {
    store.replace_all(as_targets(real_names));
  }
  const ForgetSnapshot snapshot = store.snapshot();

  std::string prefix;
  if (cfg.perturbation == Perturbation::kJailbreakPrefix) {
    prefix = load_jailbreak_prefix(cfg.jailbreak_prefix) + "\n";
  } else if (cfg.perturbation == Perturbation::kManyShot) {
    prefix = build_manyshot_prefix(load_manyshot_pool(cfg.manyshot_pool), cfg.manyshot_n, cfg.seed) +
             "\n\n";
  }

  auto cosine = [&](const std::string& a, const std::string& b) {
    if (text::trim(a).empty() || text::trim(b).empty()) return 0.0;
    return cosine_similarity(backends.embed(embed_backend, a), backends.embed(embed_backend, b));
  };
  auto score = [&](const std::string& answer, const std::string& oracle) {
    return MetricScores{rouge_l(answer, oracle).f, cosine(answer, oracle)};
  };

  std::vector<ItemRecord> records(items.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < items.size(); ++i) {
    tasks.emplace_back([&, i] {
      const auto& item = items[i];
      auto& rec = records[i];
      try {
        const Query query{prefix + item.question, {}};
        rec.query = query.text;
        rec.vanilla = runner.vanilla(query);
        std::vector<MetricScores> runs;
        double elapsed = 0.0;
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
          const auto t0 = Clock::now();
          auto answer = runner.answer(cfg.method, query, snapshot,
                                      mix_seed(cfg.seed, i * cfg.repeats + r));
          elapsed += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
          if (answer.outcome) rec.traces.push_back(*answer.outcome);
          rec.leaked = rec.leaked || leaks(answer.text, snapshot);
          if (item.split != QaSplit::kForget) {
            PipelineOutcome observed;
            if (answer.outcome) {
              observed = *answer.outcome;
            } else {
              observed.final_text = answer.text;
              observed.is_null = answer.text == pipeline_cfg.null_response;
              observed.trace.vanilla_text = rec.vanilla;
            }
            rec.false_positive = rec.false_positive || count_false_positives({observed}) > 0;
          }
          runs.push_back(score(answer.text, item.answer));
          rec.answers.push_back(std::move(answer.text));
        }
        rec.latency_ms = elapsed / static_cast<double>(cfg.repeats);
        MetricScores agg = runs.front();
        for (const auto& s : runs) {
          if (cfg.repeat_aggregation == RepeatAggregation::kMax) {
            agg.rouge_l = std::max(agg.rouge_l, s.rouge_l);
            agg.cosine = std::max(agg.cosine, s.cosine);
          }
        }
        if (cfg.repeat_aggregation == RepeatAggregation::kMean) {
          agg = {0.0, 0.0};
          for (const auto& s : runs) {
            agg.rouge_l += s.rouge_l / static_cast<double>(runs.size());
            agg.cosine += s.cosine / static_cast<double>(runs.size());
          }
        }
        switch (item.split) {
          case QaSplit::kForget:
            rec.pre_ul = score(rec.vanilla, item.answer);
            rec.post_ul = agg;
            break;
          case QaSplit::kRetain:
            rec.retain = agg;
            break;
          case QaSplit::kUnrelated:
            break;
        }
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    });
  }
  run_bounded(tasks, static_cast<int>(cfg.parallelism));

  MetricReport report;
  std::vector<double> pre_r, pre_c, post_r, post_c, ret_r, ret_c, latencies;
  std::size_t failed = 0;
  Json details = Json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& rec = records[i];
    Json d = {{"index", i},
              {"split", to_string(items[i].split)},
              {"question", items[i].question},
              {"query", rec.query},
              {"oracle", items[i].answer},
              {"vanilla", rec.vanilla},
              {"answers", rec.answers},
              {"pre_ul", rec.pre_ul ? Json(*rec.pre_ul) : Json()},
              {"post_ul", rec.post_ul ? Json(*rec.post_ul) : Json()},
              {"retain", rec.retain ? Json(*rec.retain) : Json()},
              {"leaked", rec.leaked},
              {"false_positive", rec.false_positive},
              {"error", rec.error.empty() ? Json() : Json(rec.error)},
              {"traces", rec.traces}};
    if (cfg.record_latency) d["latency_ms"] = rec.latency_ms;
    details.push_back(std::move(d));
    if (!rec.error.empty()) {
      ++failed;
      continue;
    }
    if (rec.pre_ul) {
      pre_r.push_back(rec.pre_ul->rouge_l);
      pre_c.push_back(rec.pre_ul->cosine);
    }
    if (rec.post_ul) {
      post_r.push_back(rec.post_ul->rouge_l);
      post_c.push_back(rec.post_ul->cosine);
    }
    if (rec.retain) {
      ret_r.push_back(rec.retain->rouge_l);
      ret_c.push_back(rec.retain->cosine);
    }
    report.leak_count += rec.leaked;
    report.false_positive_count += rec.false_positive;
    latencies.push_back(rec.latency_ms);
  }
  if (failed * 2 > items.size()) {
    throw ExperimentError(std::to_string(failed) + " of " + std::to_string(items.size()) +
                          " items failed; first error: " +
                          std::find_if(records.begin(), records.end(), [](const auto& r) {
                            return !r.error.empty();
                          })->error);
  }
  report.pre_ul = {mean(pre_r), mean(pre_c)};
  report.post_ul = {mean(post_r), mean(post_c)};
  report.retain = {mean(ret_r), mean(ret_c)};
  report.f_score = f_score(report.post_ul.rouge_l, report.retain.rouge_l);

  if (cfg.mcq_dataset) {
    const auto mcq = load_mcq_dataset(*cfg.mcq_dataset);
    std::vector<int> predictions(mcq.size(), -1), answers;
    std::vector<std::function<void()>> mcq_tasks;
    for (std::size_t i = 0; i < mcq.size(); ++i) {
      answers.push_back(mcq[i].answer_index);
      mcq_tasks.emplace_back([&, i] {
        try {
          predictions[i] = runner.answer_mcq(cfg.method, mcq[i], snapshot, mix_seed(cfg.seed, i))
                               .value_or(-1);
        } catch (const std::exception&) {
          predictions[i] = -1;
        }
      });
    }
    run_bounded(mcq_tasks, static_cast<int>(cfg.parallelism));
    if (!mcq.empty()) report.mcq_accuracy = mcq_accuracy(predictions, answers);
  }

  if (cfg.record_latency) {
    report.timings["mean_latency_ms"] = mean(latencies);
    report.timings["total_ms"] =
        std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  }

  if (!cfg.output.empty()) {
    std::filesystem::create_directories(cfg.output);
    std::ofstream csv(cfg.output / kReportCsvName, std::ios::binary);
    csv << kCsvHeader << "\n" << csv_row(cfg, report) << "\n";
    std::ofstream json(cfg.output / kReportJsonName, std::ios::binary);
    json << Json{{"method", to_string(cfg.method)},
                 {"dataset", cfg.dataset_name},
                 {"perturbation", to_string(cfg.perturbation)},
                 {"snapshot_version", snapshot.version()},
                 {"failed_items", failed},
                 {"report", report},
                 {"items", details}}
                .dump(2)
         << "\n";
    if (!csv || !json) throw ExperimentError("cannot write reports under " + cfg.output.string());
  }
  return report;
}

std::map<std::size_t, std::chrono::duration<double, std::milli>> measure_runtime(
    const MethodRunner& runner, Method method, const std::vector<std::size_t>& target_counts,
    const std::vector<Query>& queries, ForgetStore& store) {
  std::map<std::size_t, std::chrono::duration<double, std::milli>> out;
  if (target_counts.empty()) return out;
  if (queries.empty()) throw ValidationError("measure_runtime needs at least one query");
  for (std::size_t count : target_counts) {
    std::vector<std::string> names;
    for (std::size_t i = 1; i <= count; ++i) names.push_back("Target Person " + std::to_string(i));
    store.replace_all(as_targets(names));
    const auto snapshot = store.snapshot();
    const auto t0 = Clock::now();
    for (std::size_t q = 0; q < queries.size(); ++q) runner.answer(method, queries[q], snapshot, q);
    out[count] = (Clock::now() - t0) / static_cast<double>(queries.size());
  }
  return out;
}

std::map<SparsityRatio, std::size_t> run_sparsity_experiment(
    const std::vector<std::string>& real_targets, const std::vector<SparsityRatio>& ratios,
    std::size_t total, const std::vector<std::string>& dummy_pool,
    const std::vector<Query>& questions, const MethodRunner& runner, Method method,
    ForgetStore& store, std::uint64_t seed) {
  for (const auto& r : ratios) {
    if (r.dummy + r.real != total) {
      throw ValidationError("ratio " + std::to_string(r.dummy) + ":" + std::to_string(r.real) +
                            " does not add up to " + std::to_string(total));
    }
    if (r.real > real_targets.size()) {
      throw ValidationError("ratio needs " + std::to_string(r.real) + " real targets, have " +
                            std::to_string(real_targets.size()));
    }
  }
  std::map<SparsityRatio, std::size_t> out;
  for (const auto& r : ratios) {
    const std::vector<std::string> real(real_targets.begin(),
                                        real_targets.begin() + static_cast<std::ptrdiff_t>(r.real));
    store.replace_all(generate_sparse_set(real, dummy_pool, total, seed).targets());
    const auto snapshot = store.snapshot();
    std::vector<std::string> answers(questions.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t q = 0; q < questions.size(); ++q) {
      tasks.emplace_back([&, q] {
        try {
          answers[q] = runner.answer(method, questions[q], snapshot, mix_seed(seed, q)).text;
        } catch (const std::exception&) {
          answers[q].clear();
        }
      });
    }
    run_bounded(tasks, runner.config().max_parallel);
    out[r] = count_leaks(answers, snapshot);
  }
  return out;
}

}  // namespace unlearn
