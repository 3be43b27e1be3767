#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace strot {

// Canonical JSON type for every serialized artifact. Insertion order is
// preserved, which is what makes prompt rendering, digests, and golden
// transcripts byte-stable.
using ojson = nlohmann::ordered_json;

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Candidate names within `max_distance` case-insensitive edits of `needle`,
// ordered by (distance, candidate position). Returned in original casing.
std::vector<std::string> nearest_names(std::string_view needle,
                                       const std::vector<std::string>& candidates,
                                       std::size_t max_distance = 2);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Numerically careful sum; keeps the executor within 1e-9 of a naive
// reference at desk scale.
double pairwise_sum(const double* data, std::size_t n);

// Token estimator used when a provider does not report usage: ceil(bytes/4).
// A documented approximation, configurable via chars_per_token.
std::int64_t estimate_tokens(std::string_view text, int chars_per_token = 4);

// Short numeric rendering for prompt text (full precision lives in JSON).
std::string format_compact(double v);

std::optional<std::string> read_file(const std::string& path);
bool write_file(const std::string& path, std::string_view content);

// First balanced {...} object in raw model output, tolerating prose around
// it. Returns std::nullopt when no parseable object exists.
std::optional<ojson> extract_first_object(std::string_view raw);

}  // namespace strot
