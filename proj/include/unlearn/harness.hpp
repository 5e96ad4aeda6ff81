#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"
#include "unlearn/forget_store.hpp"
#include "unlearn/methods.hpp"

namespace unlearn {

enum class QaSplit { kForget, kRetain, kUnrelated };

std::string_view to_string(QaSplit split);
QaSplit parse_split(std::string_view name);

struct QaItem {
  std::string question;
  std::string answer;
  std::vector<std::string> target_names;
  QaSplit split = QaSplit::kRetain;

  bool operator==(const QaItem&) const = default;
};

// Throws ValidationError when a forget item names no target.
void validate(const QaItem& item);

// JSON lines; blank lines skipped. Errors carry the 1-based line number.
std::vector<QaItem> load_qa_dataset(const std::filesystem::path& path);
std::vector<McqItem> load_mcq_dataset(const std::filesystem::path& path);

using QaPair = std::pair<std::string, std::string>;

// JSON lines of {question, answer}.
std::vector<QaPair> load_manyshot_pool(const std::filesystem::path& path);

// `n` distinct pairs drawn with `seed`, as "Q: ...\nA: ..." blocks separated by
// blank lines. Throws ValidationError when n is 0 or exceeds the pool.
std::string build_manyshot_prefix(const std::vector<QaPair>& pool, std::size_t n,
                                  std::uint64_t seed);

// File contents with trailing whitespace removed.
std::string load_jailbreak_prefix(const std::filesystem::path& path);

enum class Perturbation { kNone, kJailbreakPrefix, kManyShot, kTargetListSparsity };

std::string_view to_string(Perturbation p);
Perturbation parse_perturbation(std::string_view name);

enum class RepeatAggregation { kMax, kMean };

struct ExperimentConfig {
  Method method = Method::kAlu;
  std::string dataset_name = "dataset";
  std::filesystem::path qa_dataset;
  std::optional<std::filesystem::path> mcq_dataset;
  std::optional<int> k;
  std::optional<int> j;
  std::optional<double> threshold;
  Perturbation perturbation = Perturbation::kNone;
  std::filesystem::path jailbreak_prefix;  // for kJailbreakPrefix
  std::filesystem::path manyshot_pool;     // for kManyShot
  std::size_t manyshot_n = 128;
  std::filesystem::path dummy_names;       // for kTargetListSparsity
  std::size_t sparsity_total = 1000;
  std::filesystem::path icul_pool;         // for icul; empty means none
  std::uint64_t seed = 0;
  std::filesystem::path output;            // report directory
  std::size_t parallelism = 4;
  std::size_t repeats = 1;
  RepeatAggregation repeat_aggregation = RepeatAggregation::kMax;
  // Backend used for cosine-similarity embeddings; empty means the vanilla route.
  std::string embedding_backend;
  // When false the CSV latency column is left empty so reports are byte-stable.
  bool record_latency = true;
  // Service config naming the backends (used by the command-line driver).
  std::filesystem::path service_config;
  std::optional<std::filesystem::path> prompt_dir;
  // k/j/threshold overrides are applied and random_seed is set to `seed`.
  PipelineConfig pipeline;
};

// Relative paths resolve against `base_dir`. Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// cfg.pipeline with the experiment's overrides applied.
PipelineConfig effective_pipeline(const ExperimentConfig& cfg);

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kReportCsvName = "report.csv";
inline constexpr std::string_view kReportJsonName = "details.json";
inline constexpr std::string_view kCsvHeader =
    "method,dataset,perturbation,pre_ul_rouge,post_ul_rouge,retain_rouge,pre_ul_cosine,"
    "post_ul_cosine,retain_cosine,f_score,leaks,false_positives,mean_latency_ms";

/// Scores every dataset item with the configured method.
///
/// Pre-UL compares the vanilla answer with the oracle on forget items; post-UL
/// compares the method's answer on forget items; retain compares it on retain
/// items. Leaks count method answers naming a target; false positives count
/// retain and unrelated items whose answer was nulled or altered. Failed
/// items are recorded and excluded; more than half failing throws
/// ExperimentError. Writes report.csv and details.json under cfg.output when
/// it is set.
MetricReport run_experiment(const ExperimentConfig& cfg, const BackendRegistry& backends,
                            ForgetStore& store);

std::string csv_row(const ExperimentConfig& cfg, const MetricReport& report);

// Mean wall time per query for each forget-set size; the store is refilled
// with `count` generated targets before each measurement.
std::map<std::size_t, std::chrono::duration<double, std::milli>> measure_runtime(
    const MethodRunner& runner, Method method, const std::vector<std::size_t>& target_counts,
    const std::vector<Query>& queries, ForgetStore& store);

struct SparsityRatio {
  std::size_t dummy = 0;
  std::size_t real = 0;

  auto operator<=>(const SparsityRatio&) const = default;
};

/// For each ratio, fills the store with the first `real` real targets plus
/// sampled dummies (total must equal dummy + real), answers every question
/// and counts leaking answers.
std::map<SparsityRatio, std::size_t> run_sparsity_experiment(
    const std::vector<std::string>& real_targets, const std::vector<SparsityRatio>& ratios,
    std::size_t total, const std::vector<std::string>& dummy_pool,
    const std::vector<Query>& questions, const MethodRunner& runner, Method method,
    ForgetStore& store, std::uint64_t seed);

}  // namespace unlearn
