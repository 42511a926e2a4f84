#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small UTF-8 and tokenization helpers shared by ingest, embedding and
// the plausibility check.
namespace lessonrag::text {

bool is_valid_utf8(std::string_view s) noexcept;

/// Byte offset of every code point start, plus a trailing s.size().
/// Assumes valid UTF-8.
std::vector<std::size_t> codepoint_offsets(std::string_view s);

std::size_t codepoint_count(std::string_view s) noexcept;

/// Collapses every run of ASCII whitespace into one space and trims the ends.
std::string normalize_whitespace(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercased word tokens. ASCII letters and digits form words; bytes >= 0x80
/// are kept as word characters so non-ASCII words survive intact.
std::vector<std::string> words(std::string_view s);

/// Words with common English stop words removed.
std::vector<std::string> content_words(std::string_view s);

bool is_stop_word(std::string_view lowercase_word) noexcept;

}  // namespace lessonrag::text
