#pragma once

// Document preprocessing: routing, per-pipeline extraction, table rendering
// and merge, paragraph segmentation and sliding-window chunking.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/text.hpp"

namespace curate {

class ParserServiceClient;

enum class ParserKind { StructuredTei, GenericText };

std::string_view to_string(ParserKind kind);
ParserKind parser_kind_from_string(std::string_view s);

/// Preferred pipeline first.
inline constexpr ParserKind kParserKinds[] = {ParserKind::StructuredTei, ParserKind::GenericText};

struct Paragraph {
  std::size_t index = 0;
  std::string text;
  text::Span char_span;
};

struct TableBlock {
  std::string markdown;
  std::string caption;
  std::size_t anchor_char_offset = 0;
};

struct ParsedVariant {
  std::string text;
  std::vector<Paragraph> paragraphs;
};

struct ParsedDocument {
  std::string doc_id;
  std::string source_uri;
  std::map<ParserKind, ParsedVariant> variants;
  /// Anchored into the structured variant's text, ascending.
  std::vector<TableBlock> tables;
  bool ocr_applied = false;
  /// Per-variant extraction failures, keyed by pipeline name.
  std::map<std::string, std::string> failures;

  bool failed() const { return variants.empty(); }
  bool has(ParserKind kind) const { return variants.count(kind) != 0; }

  /// The preferred variant (structured first).
  std::optional<ParserKind> preferred_kind() const;

  /// Variant text as handed to the LLM; the structured variant carries the
  /// merged table markdown.
  std::string prompt_text(ParserKind kind) const;
};

struct Chunk {
  std::string doc_id;
  ParserKind variant = ParserKind::StructuredTei;
  text::Span span;
  std::string text;
};

struct TextLayerProbe {
  bool readable = false;
  bool has_text_layer = false;
  std::size_t size_bytes = 0;
};

struct IngestPlan {
  bool ocr = false;
  std::vector<ParserKind> parsers;
};

/// Inspects a file for a machine-readable text layer. Non-PDF inputs are
/// treated as text.
TextLayerProbe probe_source(const std::string& path);

IngestPlan route_document(const TextLayerProbe& probe);

/// Paragraph split on blank lines; each paragraph is trimmed and the
/// returned text is the paragraphs joined by a blank line.
ParsedVariant segment_paragraphs(std::string_view raw);

/// Paragraphs from a TEI document (abstract, then body division heads and
/// paragraphs); figures and tables in the TEI are skipped.
ParsedVariant tei_to_variant(std::string_view tei_xml);

struct SourceFile {
  std::string path;
  std::string bytes;
};

ParsedVariant parse_variant(const SourceFile& source, ParserKind kind, ParserServiceClient& service);

std::string html_table_to_markdown(std::string_view html_table);

/// Inserts each table (caption first) at the paragraph boundary at or after
/// its anchor. Paragraph boundaries are the starts of blank-line separators
/// and the end of the text.
std::string merge_tables(std::string_view text, std::vector<TableBlock> tables);

inline constexpr double kDefaultOverlap = 0.10;

std::vector<Chunk> chunk_text(std::string_view text, std::size_t window_chars,
                              double overlap_fraction = kDefaultOverlap);

struct TableSource {
  std::string html;
  std::string caption;
  std::size_t anchor = 0;
};

struct IngestOptions {
  /// `{input}` and `{output}` are substituted; empty disables OCR.
  std::string ocr_command;
};

struct PipelineClients {
  ParserServiceClient* structured = nullptr;
  ParserServiceClient* generic = nullptr;
};

/// Full preprocessing for one source file. Reads a `<stem>.tables.json`
/// sidecar (list of {html, caption, anchor}) when present; those are the
/// table-structure-recognition outputs for the document.
ParsedDocument ingest_document(const std::string& doc_id, const std::string& source_path,
                               const PipelineClients& clients, const IngestOptions& options);

}  // namespace curate
