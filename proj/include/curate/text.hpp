#pragma once

// Unicode helpers shared by every module. All character offsets exposed by
// the engine count Unicode code points, never bytes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace curate::text {

/// Half-open range of code point offsets.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);

/// Number of code points in a UTF-8 string.
std::size_t length(std::string_view utf8);

/// Byte offsets of every code point start plus the final end offset, so
/// `offsets[i]` is the byte position of code point `i`.
std::vector<std::size_t> code_point_offsets(std::string_view utf8);

/// Substring by code point span.
std::string slice(std::string_view utf8, Span span);

bool is_space(char32_t cp);
bool is_alnum(char32_t cp);

/// Simple (1:1) case folding of one code point.
char32_t fold_simple(char32_t cp);

/// Full Unicode case folding.
std::string fold_case(std::string_view utf8);
std::string to_nfc(std::string_view utf8);

std::string trim(std::string_view s);
/// Trims and replaces every whitespace run by one ASCII space.
std::string collapse_whitespace(std::string_view utf8);

/// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view utf8);

/// Normalized form used for provenance matching together with a map from
/// each normalized code point back to its source code point offset.
struct FoldedText {
  std::u32string chars;
  std::vector<std::size_t> source_index;
};

/// Simple case folding plus whitespace collapse; keeps a 1:1 trail back to
/// the source so matches can be reported as source spans.
FoldedText fold_for_matching(std::string_view utf8);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace curate::text
