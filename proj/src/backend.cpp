#include "unlearn/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "unlearn/errors.hpp"
#include "unlearn/random.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {

void validate(const ChatRequest& request) {
  if (request.messages.empty()) throw ValidationError("chat request has no messages");
  if (!(request.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (request.max_tokens && *request.max_tokens <= 0) {
    throw ValidationError("max_tokens must be positive");
  }
}

std::string flatten(const ChatRequest& request) {
  std::string out;
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i) out.push_back('\n');
    out += request.messages[i].content;
  }
  return out;
}

ScriptedScript parse_scripted_script(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scripted rules: ") + e.what());
  }
  ScriptedScript script;
  const Json* rules = &doc;
  if (doc.is_object()) {
    script.fallback = doc.value("fallback", std::string{});
    rules = &doc.at("rules");
  }
  if (!rules->is_array()) throw ParseError("scripted rules must be an array");
  for (const auto& r : *rules) {
    ScriptedRule rule;
    rule.match = r.at("match").get<std::string>();
    const auto kind = r.value("match_kind", std::string("substring"));
    if (kind == "substring") {
      rule.kind = MatchKind::kSubstring;
    } else if (kind == "regex") {
      rule.kind = MatchKind::kRegex;
    } else {
      throw ParseError("unknown match_kind '" + kind + "'");
    }
    rule.response = r.at("response").get<std::string>();
    const auto latency = r.value("latency_ms", std::int64_t{0});
    if (latency < 0) throw ValidationError("latency_ms must be >= 0");
    rule.latency = std::chrono::milliseconds(latency);
    rule.all_of = r.value("all_of", std::vector<std::string>{});
    script.rules.push_back(std::move(rule));
  }
  return script;
}

ScriptedScript load_scripted_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted rules file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scripted_script(buf.str());
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules, std::string fallback,
                                 std::chrono::milliseconds fallback_latency)
    : fallback_(std::move(fallback)), fallback_latency_(fallback_latency) {
  rules_.reserve(rules.size());
  for (auto& rule : rules) {
    if (rule.latency.count() < 0) throw ValidationError("rule latency must be >= 0");
    Compiled c{std::move(rule), std::nullopt};
    if (c.rule.kind == MatchKind::kRegex) {
      try {
        c.pattern.emplace(c.rule.match, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ValidationError("rule pattern '" + c.rule.match + "' does not compile: " + e.what());
      }
    }
    rules_.push_back(std::move(c));
  }
}

ScriptedBackend::ScriptedBackend(ScriptedScript script)
    : ScriptedBackend(std::move(script.rules), std::move(script.fallback)) {}

std::optional<std::size_t> ScriptedBackend::match(const ChatRequest& request) const {
  const std::string haystack = flatten(request);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& c = rules_[i];
    bool hit = std::all_of(c.rule.all_of.begin(), c.rule.all_of.end(), [&](const auto& s) {
      return haystack.find(s) != std::string::npos;
    });
    hit = hit && (c.pattern ? std::regex_search(haystack, *c.pattern)
                            : haystack.find(c.rule.match) != std::string::npos);
    if (hit) return i;
  }
  return std::nullopt;
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  validate(request);
  calls_.fetch_add(1);
  if (auto i = match(request)) {
    const auto& rule = rules_[*i].rule;
    if (rule.latency.count() > 0) std::this_thread::sleep_for(rule.latency);
    return rule.response;
  }
  if (fallback_latency_.count() > 0) std::this_thread::sleep_for(fallback_latency_);
  return fallback_;
}

EmbeddingVector ScriptedBackend::embed(std::string_view text) {
  if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
  return pseudo_embedding(text, kEmbeddingDimension, kEmbeddingSeed);
}

EmbeddingVector pseudo_embedding(std::string_view text, std::size_t dimension,
                                 std::uint64_t seed) {
  std::vector<double> v(dimension, 0.0);
  const auto tokens = text::tokenize(text);
  for (const auto& token : tokens) {
    const std::uint64_t h = mix_seed(seed, text::fnv1a(token));
    v[h % dimension] += (h >> 63) ? 1.0 : -1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    // No tokens (or full cancellation): derive the vector from the normalised text.
    std::string normalised = text::join(text::tokenize(text), " ");
    if (normalised.empty()) normalised = text::to_lower(text::trim(text));
    Rng rng(mix_seed(seed, text::fnv1a(normalised)));
    for (double& x : v) x = static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
    norm = 0.0;
    for (double x : v) norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return EmbeddingVector{std::move(v)};
}

FaultInjectingBackend::FaultInjectingBackend(std::shared_ptr<ChatBackend> inner,
                                             Predicate should_fail)
    : inner_(std::move(inner)), should_fail_(std::move(should_fail)) {}

std::string FaultInjectingBackend::complete(const ChatRequest& request) {
  if (should_fail_ && should_fail_(request)) {
    injected_.fetch_add(1);
    throw BackendError(BackendError::Kind::kInjected, "injected backend fault");
  }
  return inner_->complete(request);
}

void BackendRegistry::add(std::string id, std::shared_ptr<ChatBackend> backend) {
  if (!backend) throw ValidationError("backend '" + id + "' is null");
  backends_[std::move(id)] = std::move(backend);
}

bool BackendRegistry::has(std::string_view id) const { return backends_.find(id) != backends_.end(); }

std::shared_ptr<ChatBackend> BackendRegistry::get(std::string_view id) const {
  auto it = backends_.find(id);
  if (it == backends_.end()) {
    throw BackendError(BackendError::Kind::kUnknownBackend,
                       "unknown backend '" + std::string(id) + "'");
  }
  return it->second;
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : backends_) out.push_back(id);
  return out;
}

std::string BackendRegistry::complete(std::string_view backend_id,
                                      const ChatRequest& request) const {
  auto backend = get(backend_id);
  validate(request);
  return backend->complete(request);
}

EmbeddingVector BackendRegistry::embed(std::string_view backend_id, std::string_view text) const {
  auto backend = get(backend_id);
  if (text::trim(text).empty()) throw ValidationError("cannot embed empty text");
  return backend->embed(text);
}

}  // namespace unlearn
