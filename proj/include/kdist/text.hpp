#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kdist {

/// Trims, collapses internal whitespace runs to one ASCII space and applies
/// Unicode NFC. Case is preserved. Invalid UTF-8 is replaced with U+FFFD.
std::string normalize_text(std::string_view raw);

/// Strips leading/trailing Unicode whitespace only.
std::string trim(std::string_view s);

/// Number of Unicode code points.
std::size_t utf8_length(std::string_view s);

/// True for tails that carry no content: fewer than 3 characters after
/// trimming, or nothing left once the PersonX/PersonY markers, punctuation
/// and whitespace are removed.
bool is_degenerate(std::string_view tail);

/// Lowercase, drop punctuation, split on whitespace. Shared by the lexical
/// statistics and BLEU so token counts agree across reports.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercased copy (full Unicode case mapping).
std::string to_lower(std::string_view s);

/// Replaces every occurrence of `from` with `to`, scanning left to right.
std::string replace_all(std::string_view text, std::string_view from, std::string_view to);

/// Replaces whole-word occurrences of `word`. A match is whole-word when the
/// neighbouring code points (if any) are not letters, digits or underscore.
std::string replace_whole_word(std::string_view text, std::string_view word, std::string_view to);

/// True if `word` occurs in `text` as a whole word.
bool contains_whole_word(std::string_view text, std::string_view word);

}  // namespace kdist
