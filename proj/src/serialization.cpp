#include "unlearn/serialization.hpp"

#include "unlearn/errors.hpp"

namespace unlearn {
namespace {

template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    out.reset();
  } else {
    out = it->get<T>();
  }
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename V>
Json agent_map_json(const std::map<Agent, V>& m) {
  Json out = Json::object();
  for (const auto& [agent, value] : m) out[std::string(to_string(agent))] = value;
  return out;
}

template <typename V>
std::map<Agent, V> agent_map_from(const Json& j) {
  std::map<Agent, V> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[parse_agent(it.key())] = it.value().get<V>();
  return out;
}

}  // namespace

void to_json(Json& j, Role v) { j = std::string(to_string(v)); }
void from_json(const Json& j, Role& v) { v = parse_role(j.get<std::string>()); }
void to_json(Json& j, Agent v) { j = std::string(to_string(v)); }
void from_json(const Json& j, Agent& v) { v = parse_agent(j.get<std::string>()); }

void to_json(Json& j, const Message& v) { j = Json{{"role", v.role}, {"content", v.content}}; }
void from_json(const Json& j, Message& v) {
  v.role = j.at("role").get<Role>();
  v.content = j.at("content").get<std::string>();
}

void to_json(Json& j, const UnlearnTarget& v) {
  j = Json{{"id", v.id},
           {"canonical_name", v.canonical_name},
           {"aliases", v.aliases},
           {"added_at", v.added_at}};
}
void from_json(const Json& j, UnlearnTarget& v) {
  v.id = j.at("id").get<std::string>();
  v.canonical_name = j.at("canonical_name").get<std::string>();
  v.aliases = j.value("aliases", std::vector<std::string>{});
  v.added_at = j.value("added_at", Timestamp{0});
}

void to_json(Json& j, const ForgetSet& v) {
  j = Json{{"version", v.version()}, {"targets", v.targets()}};
}
void from_json(const Json& j, ForgetSet& v) {
  v = ForgetSet(j.at("targets").get<std::vector<UnlearnTarget>>(),
                j.at("version").get<std::uint64_t>());
}

void to_json(Json& j, const ForgetSnapshot& v) { to_json(j, v.set()); }
void from_json(const Json& j, ForgetSnapshot& v) { v = ForgetSnapshot(j.get<ForgetSet>()); }

void to_json(Json& j, const Query& v) { j = Json{{"text", v.text}, {"history", v.history}}; }
void from_json(const Json& j, Query& v) {
  v.text = j.at("text").get<std::string>();
  v.history = j.value("history", std::vector<Message>{});
}

void to_json(Json& j, const VanillaResponse& v) { j = Json{{"text", v.text}}; }
void from_json(const Json& j, VanillaResponse& v) { v.text = j.at("text").get<std::string>(); }

void to_json(Json& j, const DetectedTargets& v) { j = Json{{"targets", v.ids}}; }
void from_json(const Json& j, DetectedTargets& v) {
  v.ids = j.at("targets").get<std::vector<std::string>>();
}

void to_json(Json& j, const SanitizedVariant& v) {
  j = Json{{"index", v.index}, {"text", v.text}, {"for_targets", v.for_targets}};
}
void from_json(const Json& j, SanitizedVariant& v) {
  v.index = j.at("index").get<int>();
  v.text = j.at("text").get<std::string>();
  v.for_targets = j.at("for_targets").get<DetectedTargets>();
}

void to_json(Json& j, const CriticRating& v) {
  j = Json{{"variant_index", v.variant_index},
           {"per_target_scores", v.per_target_scores},
           {"aggregate", v.aggregate}};
}
void from_json(const Json& j, CriticRating& v) {
  v = make_rating(j.at("variant_index").get<int>(),
                  j.at("per_target_scores").get<std::map<std::string, int>>());
  if (auto it = j.find("aggregate"); it != j.end() && it->get<int>() != v.aggregate) {
    throw ValidationError("rating aggregate disagrees with min of per-target scores");
  }
}

void to_json(Json& j, const PipelineConfig& v) {
  j = Json{{"k", v.k},
           {"j", v.j},
           {"threshold", v.threshold},
           {"null_response", v.null_response},
           {"skip_vanilla", v.skip_vanilla},
           {"prompt_overrides", agent_map_json(v.prompt_overrides)},
           {"backend_routes", agent_map_json(v.backend_routes)},
           {"default_backend", v.default_backend},
           {"temperatures", agent_map_json(v.temperatures)},
           {"random_seed", v.random_seed},
           {"max_parallel", v.max_parallel}};
}
void from_json(const Json& j, PipelineConfig& v) {
  PipelineConfig d;
  v.k = j.value("k", d.k);
  v.j = j.value("j", d.j);
  v.threshold = j.value("threshold", d.threshold);
  v.null_response = j.value("null_response", d.null_response);
  v.skip_vanilla = j.value("skip_vanilla", d.skip_vanilla);
  v.prompt_overrides = j.contains("prompt_overrides")
                           ? agent_map_from<std::string>(j.at("prompt_overrides"))
                           : d.prompt_overrides;
  v.backend_routes = j.contains("backend_routes")
                         ? agent_map_from<std::string>(j.at("backend_routes"))
                         : d.backend_routes;
  v.default_backend = j.value("default_backend", d.default_backend);
  v.temperatures = d.temperatures;
  if (j.contains("temperatures")) {
    for (auto& [agent, t] : agent_map_from<double>(j.at("temperatures"))) v.temperatures[agent] = t;
  }
  v.random_seed = j.value("random_seed", d.random_seed);
  v.max_parallel = j.value("max_parallel", d.max_parallel);
  validate(v);
}

void to_json(Json& j, const StageTiming& v) { j = Json{{"stage", v.stage}, {"millis", v.millis}}; }
void from_json(const Json& j, StageTiming& v) {
  v.stage = j.at("stage").get<std::string>();
  v.millis = j.at("millis").get<double>();
}

void to_json(Json& j, const VariantFailure& v) { j = Json{{"index", v.index}, {"error", v.error}}; }
void from_json(const Json& j, VariantFailure& v) {
  v.index = j.at("index").get<int>();
  v.error = j.at("error").get<std::string>();
}

void to_json(Json& j, const RatingError& v) {
  j = Json{{"variant_index", v.variant_index},
           {"target_id", v.target_id},
           {"error", v.error},
           {"raw", v.raw}};
}
void from_json(const Json& j, RatingError& v) {
  v.variant_index = j.at("variant_index").get<int>();
  v.target_id = j.at("target_id").get<std::string>();
  v.error = j.at("error").get<std::string>();
  v.raw = j.value("raw", std::string{});
}

void to_json(Json& j, const PipelineTrace& v) {
  j = Json{{"mode", v.mode},
           {"stages", v.stages},
           {"snapshot_version", v.snapshot_version},
           {"vanilla_text", optional_json(v.vanilla_text)},
           {"detect_raw", v.detect_raw},
           {"detected_ids", v.detected_ids},
           {"discarded_names", v.discarded_names},
           {"detect_unparseable", v.detect_unparseable},
           {"short_circuit", v.short_circuit},
           {"variants", v.variants},
           {"variant_failures", v.variant_failures},
           {"ratings", v.ratings},
           {"rating_errors", v.rating_errors},
           {"selected_indices", v.selected_indices},
           {"mean_score", optional_json(v.mean_score)},
           {"composer_raw", optional_json(v.composer_raw)},
           {"failure_stage", optional_json(v.failure_stage)},
           {"failure", v.failure},
           {"backend_calls", v.backend_calls}};
}
void from_json(const Json& j, PipelineTrace& v) {
  v.mode = j.at("mode").get<std::string>();
  v.stages = j.at("stages").get<std::vector<std::string>>();
  v.snapshot_version = j.at("snapshot_version").get<std::uint64_t>();
  read_optional(j, "vanilla_text", v.vanilla_text);
  v.detect_raw = j.value("detect_raw", std::string{});
  v.detected_ids = j.value("detected_ids", std::vector<std::string>{});
  v.discarded_names = j.value("discarded_names", std::vector<std::string>{});
  v.detect_unparseable = j.value("detect_unparseable", false);
  v.short_circuit = j.value("short_circuit", false);
  v.variants = j.value("variants", std::vector<SanitizedVariant>{});
  v.variant_failures = j.value("variant_failures", std::vector<VariantFailure>{});
  v.ratings = j.value("ratings", std::vector<CriticRating>{});
  v.rating_errors = j.value("rating_errors", std::vector<RatingError>{});
  v.selected_indices = j.value("selected_indices", std::vector<int>{});
  read_optional(j, "mean_score", v.mean_score);
  read_optional(j, "composer_raw", v.composer_raw);
  read_optional(j, "failure_stage", v.failure_stage);
  v.failure = j.value("failure", std::string{});
  v.backend_calls = j.value("backend_calls", 0);
}

void to_json(Json& j, const PipelineOutcome& v) {
  j = Json{{"final_text", v.final_text},
           {"is_null", v.is_null},
           {"trace", v.trace},
           {"timings", v.timings}};
}
void from_json(const Json& j, PipelineOutcome& v) {
  v.final_text = j.at("final_text").get<std::string>();
  v.is_null = j.at("is_null").get<bool>();
  v.trace = j.at("trace").get<PipelineTrace>();
  v.timings = j.value("timings", std::vector<StageTiming>{});
}

void to_json(Json& j, const McqItem& v) {
  j = Json{{"subject", v.subject},
           {"question", v.question},
           {"choices", v.choices},
           {"answer_index", v.answer_index}};
}
void from_json(const Json& j, McqItem& v) {
  v.subject = j.value("subject", std::string{});
  v.question = j.at("question").get<std::string>();
  const auto& choices = j.at("choices");
  if (!choices.is_array() || choices.size() != 4) {
    throw ValidationError("mcq item needs exactly 4 choices");
  }
  for (std::size_t i = 0; i < 4; ++i) v.choices[i] = choices[i].get<std::string>();
  v.answer_index = j.at("answer_index").get<int>();
  validate(v);
}

void to_json(Json& j, const MetricScores& v) {
  j = Json{{"rouge_l", v.rouge_l}, {"cosine", v.cosine}};
}
void from_json(const Json& j, MetricScores& v) {
  v.rouge_l = j.at("rouge_l").get<double>();
  v.cosine = j.at("cosine").get<double>();
}

void to_json(Json& j, const MetricReport& v) {
  j = Json{{"pre_ul", v.pre_ul},
           {"post_ul", v.post_ul},
           {"retain", v.retain},
           {"f_score", v.f_score},
           {"leak_count", v.leak_count},
           {"false_positive_count", v.false_positive_count},
           {"mcq_accuracy", optional_json(v.mcq_accuracy)},
           {"timings", v.timings}};
}
void from_json(const Json& j, MetricReport& v) {
  v.pre_ul = j.at("pre_ul").get<MetricScores>();
  v.post_ul = j.at("post_ul").get<MetricScores>();
  v.retain = j.at("retain").get<MetricScores>();
  v.f_score = j.at("f_score").get<double>();
  v.leak_count = j.at("leak_count").get<std::int64_t>();
  v.false_positive_count = j.at("false_positive_count").get<std::int64_t>();
  read_optional(j, "mcq_accuracy", v.mcq_accuracy);
  v.timings = j.value("timings", std::map<std::string, double>{});
}

}  // namespace unlearn
