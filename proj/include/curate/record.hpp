#pragma once

// Schema, records and cells: the data curators see and correct.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "curate/ingest.hpp"
#include "curate/text.hpp"

namespace curate {

/// Column name -> value. Empty string means "not found".
using ValueMap = std::map<std::string, std::string>;

struct Column {
  std::string name;
  std::optional<std::string> example_hint;
};

class Schema {
 public:
  Schema() = default;
  /// Throws EmptySchema without columns and SchemaParseError on duplicate
  /// (trimmed) names.
  explicit Schema(std::vector<Column> columns, int version = 1);

  static Schema from_names(const std::vector<std::string>& names);
  /// First CSV row is the header; an optional second row supplies example hints.
  static Schema parse_csv(std::string_view csv);
  /// `["A", "B"]` or `[{"name": "A", "example": "x"}, ...]`.
  static Schema parse_json(std::string_view json);
  /// Dispatches on the first non-blank character.
  static Schema parse_file_contents(std::string_view contents);

  const std::vector<Column>& columns() const { return columns_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return columns_.size(); }
  bool contains(std::string_view name) const;
  int version() const { return version_; }

  friend bool operator==(const Schema& a, const Schema& b) { return a.names() == b.names(); }

 private:
  std::vector<Column> columns_;
  int version_ = 1;
};

enum class Origin { StructuredTei, GenericText, Merged };
enum class RecordStatus { Generated, Edited, Locked, Irrelevant };
enum class Band { Supported, Partial, Unsupported };

std::string_view to_string(Origin o);
std::string_view to_string(RecordStatus s);
std::string_view to_string(Band b);
Origin origin_from_string(std::string_view s);
RecordStatus status_from_string(std::string_view s);
Band band_from_string(std::string_view s);
Origin origin_of(ParserKind kind);

struct MatchGrade {
  int ratio = 0;
  Band band = Band::Unsupported;
  std::optional<text::Span> best_span;
  /// Variant whose prompt text `best_span` indexes.
  std::optional<ParserKind> span_variant;
};

struct Cell {
  std::string value;
  bool edited = false;
  std::optional<MatchGrade> provenance;
};

/// The second pipeline's aligned record, offered for comparison.
struct Alternative {
  ValueMap values;
  Origin origin = Origin::GenericText;
  double score = 0.0;
};

struct Record {
  std::int64_t record_id = 0;
  std::string doc_id;
  std::map<std::string, Cell> cells;
  Origin origin = Origin::StructuredTei;
  RecordStatus status = RecordStatus::Generated;
  std::optional<Alternative> alternative;

  std::string value(const std::string& column) const;
  ValueMap values() const;
  static Record from_values(std::string doc_id, const ValueMap& values, Origin origin);
};

/// Record set produced by alignment; the primary carries the alternative.
using MergedRecord = Record;

struct ICLExample {
  std::string source_doc_excerpt;
  std::vector<ValueMap> records;
};

/// Records as a compact JSON array of objects with keys in schema order.
/// This is the canonical serialization used for dedup and demonstrations.
std::string records_to_json(const std::vector<ValueMap>& records, const Schema& schema);

void to_json(nlohmann::json& j, const MatchGrade& g);
void from_json(const nlohmann::json& j, MatchGrade& g);
void to_json(nlohmann::json& j, const Record& r);
void from_json(const nlohmann::json& j, Record& r);
void to_json(nlohmann::json& j, const Schema& s);
void from_json(const nlohmann::json& j, Schema& s);

}  // namespace curate
