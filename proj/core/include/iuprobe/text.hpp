#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace iuprobe::text {

/// NFC-normalizes and case-folds UTF-8 input. Invalid sequences become U+FFFD.
std::u32string normalize_fold(std::string_view utf8);

std::string to_utf8(std::u32string_view text);

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes skipped).
std::size_t scalar_count(std::string_view utf8) noexcept;

/// Letters, digits, combining marks, and '_' are word characters.
bool is_word_char(char32_t c) noexcept;

bool is_space(char32_t c) noexcept;

/// Whitespace tokenization of already-folded text.
std::vector<std::u32string> whitespace_tokens(std::u32string_view folded);

/// Fallback extractors used when an activity record carries no pre-extracted counts.
struct SurfaceCounts {
    std::size_t mentions = 0;
    std::size_t hashtags = 0;
    std::size_t urls = 0;
};
SurfaceCounts extract_surface_counts(std::string_view utf8);

}  // namespace iuprobe::text
