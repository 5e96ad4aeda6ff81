#pragma once

// Canonical JSON encoding of the core types: snake_case object keys, enums as
// lowercase strings.

#include <json.hpp>

#include "unlearn/core.hpp"

namespace unlearn {

using Json = nlohmann::json;

void to_json(Json& j, Role v);
void from_json(const Json& j, Role& v);
void to_json(Json& j, Agent v);
void from_json(const Json& j, Agent& v);

#define UNLEARN_DECLARE_JSON(T)     \
  void to_json(Json& j, const T& v); \
  void from_json(const Json& j, T& v);

UNLEARN_DECLARE_JSON(Message)
UNLEARN_DECLARE_JSON(UnlearnTarget)
UNLEARN_DECLARE_JSON(ForgetSet)
UNLEARN_DECLARE_JSON(ForgetSnapshot)
UNLEARN_DECLARE_JSON(Query)
UNLEARN_DECLARE_JSON(VanillaResponse)
UNLEARN_DECLARE_JSON(DetectedTargets)
UNLEARN_DECLARE_JSON(SanitizedVariant)
UNLEARN_DECLARE_JSON(CriticRating)
UNLEARN_DECLARE_JSON(PipelineConfig)
UNLEARN_DECLARE_JSON(StageTiming)
UNLEARN_DECLARE_JSON(VariantFailure)
UNLEARN_DECLARE_JSON(RatingError)
UNLEARN_DECLARE_JSON(PipelineTrace)
UNLEARN_DECLARE_JSON(PipelineOutcome)
UNLEARN_DECLARE_JSON(McqItem)
UNLEARN_DECLARE_JSON(MetricScores)
UNLEARN_DECLARE_JSON(MetricReport)

#undef UNLEARN_DECLARE_JSON

}  // namespace unlearn
