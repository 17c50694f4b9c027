#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "curate/bm25.hpp"
#include "curate/ingest.hpp"
#include "curate/llm.hpp"
#include "curate/record.hpp"

namespace curate {

class CorrectionPool;

inline constexpr std::string_view kArticleStart = "[Given Article Start]";
inline constexpr std::string_view kArticleEnd = "[Given Article End]";
inline constexpr std::string_view kExampleStart = "[Example Article Start]";
inline constexpr std::string_view kExampleEnd = "[Example Article End]";
inline constexpr std::string_view kExampleResponse = "[Example Response]";
inline constexpr std::string_view kJsonOnlyReminder =
    "Respond with JSON only: a list of JSON dictionaries using the Dictionary Key Mapping.";

/// Extraction prompt. Mapping hints come from the top example's first
/// record, falling back to the column's schema hint.
std::string build_prompt(const Schema& schema, std::string_view article_text,
                         const std::vector<ICLExample>& examples);

/// First JSON array of objects in `raw`, one record per object. Throws
/// OutputUnparseable.
std::vector<ValueMap> parse_llm_output(std::string_view raw, const Schema& schema);

/// Canonical string form of a scalar JSON value as stored in a cell.
std::string stringify_json_value(const nlohmann::json& v);

struct GenerationOptions {
  /// Chunk window in characters; 0 means 80% of the provider's context.
  std::size_t window_chars = 0;
  double overlap = kDefaultOverlap;
  std::size_t shots = 1;
  Bm25Params bm25;
  /// Share of the context reserved for instructions and examples.
  double overhead_fraction = 0.2;
};

std::size_t effective_window(const GenerationOptions& options, const LlmProvider& llm);

struct VariantFailure {
  std::string message;
  /// Unparseable LLM output kept verbatim for the audit trail.
  std::string raw_output;
};

struct DualRecordSets {
  std::map<ParserKind, std::vector<Record>> sets;
  std::map<ParserKind, VariantFailure> failures;
  /// Number of demonstration examples placed in the prompts.
  std::size_t examples_used = 0;
};

/// Chunk, prompt, call and parse every available variant of `doc`.
/// Throws GenerationFailed when no variant produced output.
DualRecordSets generate_records(const ParsedDocument& doc, const Schema& schema, const CorrectionPool& pool,
                                LlmProvider& llm, const GenerationOptions& options = {});

/// Variant of the above with the examples already chosen.
DualRecordSets generate_records_with_examples(const ParsedDocument& doc, const Schema& schema,
                                              const std::vector<ICLExample>& examples, LlmProvider& llm,
                                              const GenerationOptions& options = {});

}  // namespace curate
