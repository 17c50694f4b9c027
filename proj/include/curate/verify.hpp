#pragma once

// Verification support: cell provenance grading, supporting paragraph
// retrieval with highlighting, and explanation prompts.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/bm25.hpp"
#include "curate/ingest.hpp"
#include "curate/record.hpp"

namespace curate {

struct BandThresholds {
  int supported = 90;
  int partial = 60;
};

Band band_for(int ratio, BandThresholds thresholds = {});

enum class FuzzyScorer {
  /// Best window of the haystack.
  PartialRatio,
  /// Needle against the whole haystack.
  Ratio,
};

FuzzyScorer fuzzy_scorer_from_string(std::string_view s);

struct FuzzyOptions {
  FuzzyScorer scorer = FuzzyScorer::PartialRatio;
  /// Upper bound on window evaluations per call; beyond it only the
  /// start positions sharing the most character trigrams are examined.
  std::size_t max_comparisons = 20000;
};

struct FuzzyMatch {
  int ratio = 0;
  /// Best window in haystack code point offsets.
  std::optional<text::Span> span;
};

/// Both inputs are case-folded and whitespace-collapsed first. The score of a
/// window is round(100 * (1 - lev / max(|needle|, |window|))) with window
/// lengths |needle| +- ceil(|needle| / 4); 100 is reserved for exact
/// windows. An empty needle scores 0.
FuzzyMatch fuzzy_match(std::string_view needle, std::string_view haystack, const FuzzyOptions& options = {});
int fuzzy_ratio(std::string_view needle, std::string_view haystack, const FuzzyOptions& options = {});

/// Best ratio over every variant's prompt text (which carries the merged
/// table markdown).
MatchGrade provenance_check(std::string_view cell_value, const ParsedDocument& doc,
                            BandThresholds thresholds = {}, const FuzzyOptions& options = {});

struct ScoredParagraph {
  Paragraph paragraph;
  double score = 0.0;
  /// Paragraph text with matched query tokens wrapped in `**`.
  std::string highlighted;
};

inline constexpr std::size_t kDefaultSupportK = 3;

std::vector<ScoredParagraph> supporting_paragraphs(const std::vector<std::string>& query_cell_values,
                                                   const ParsedDocument& doc, std::size_t top_k = kDefaultSupportK,
                                                   Bm25Params params = {});

std::string highlight_tokens(std::string_view paragraph, const std::vector<std::string>& query_tokens);
std::string strip_highlight(std::string_view highlighted);

/// Throws UnknownAttribute when `attribute` is not a schema column.
std::string build_explanation_prompt(const Schema& schema, std::string_view attribute, std::string_view value,
                                     std::string_view article_text);

}  // namespace curate
