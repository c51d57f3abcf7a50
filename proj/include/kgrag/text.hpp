#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag::text {

/// True for bytes that belong to a token: ASCII alphanumerics plus any
/// byte >= 0x80, so multi-byte UTF-8 sequences survive as token content.
bool is_word_byte(unsigned char c);

std::string to_lower(std::string_view s);

/// Lowercased maximal runs of word bytes. This single pipeline feeds the
/// encoder, TF-IDF, entity detection and ROUGE so their term spaces agree.
std::vector<std::string> tokenize(std::string_view s);

/// Canonical form for entity names: lowercase, whitespace runs collapsed
/// to single spaces, trimmed.
std::string normalize_name(std::string_view s);

/// Collapse whitespace runs and trim without case folding.
std::string collapse_whitespace(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

/// chars/4 heuristic used for prompt budgeting.
std::size_t approx_token_count(std::string_view s);

void warn(const std::string& message);

}  // namespace kgrag::text
