#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace unlearn::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Lowercased tokens from splitting on runs of non-alphanumeric ASCII bytes.
// Bytes >= 0x80 count as alphanumeric so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view s);

// True when `needle` occurs as a contiguous run of whole tokens in `haystack`.
bool contains_token_sequence(const std::vector<std::string>& haystack,
                             const std::vector<std::string>& needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace unlearn::text
