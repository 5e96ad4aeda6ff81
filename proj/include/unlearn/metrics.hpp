#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/backend.hpp"
#include "unlearn/core.hpp"

namespace unlearn {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// Length of the longest common subsequence of two token sequences.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// ROUGE-L over text::tokenize() tokens. Empty sides score 0.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// Throws ValidationError on a dimension mismatch or a zero vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Harmonic mean of (1 - forget ROUGE-L) and retain ROUGE-L; 0 when both are 0.
double f_score(double forget_rouge, double retain_rouge);

double mcq_accuracy(const std::vector<int>& predictions, const std::vector<int>& answers);

// Responses naming any target (canonical or alias) as a whole token sequence,
// case-insensitively. Each response counts once.
std::size_t count_leaks(const std::vector<std::string>& responses, const ForgetSnapshot& snapshot);

// True if `response` names any target in `snapshot`.
bool leaks(std::string_view response, const ForgetSnapshot& snapshot);

// Outcomes for target-free queries that were nulled or altered. Throws
// ValidationError unless `expected_unrelated` is set.
std::size_t count_false_positives(const std::vector<PipelineOutcome>& outcomes,
                                  bool expected_unrelated = true);

ChatRequest build_privacy_judge_prompt(const Query& query, std::string_view response,
                                       const ForgetSnapshot& snapshot, int scale_max = 5);

// First number in [1, scale_max]; scale_max is 5 or 10. Throws ParseError.
double parse_privacy_score(std::string_view text, int scale_max = 5);

}  // namespace unlearn
