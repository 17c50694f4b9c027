#pragma once

// Table dump: the interchange format shared by the simulator output, the
// JSON export and the evaluator input.
//
//   { "schema": [columns],
//     "documents": [ { "doc_id": "...", "records": [ {col: value} ] } ] }

#include <string>
#include <string_view>
#include <vector>

#include "curate/record.hpp"

namespace curate {

struct DumpDocument {
  std::string doc_id;
  std::vector<ValueMap> records;
};

struct TableDump {
  std::vector<std::string> schema;
  std::vector<DumpDocument> documents;
  /// Columns removed from the schema whose values are still exported.
  std::vector<std::string> retired;
};

/// Throws MalformedDump.
TableDump parse_dump(std::string_view json);
TableDump load_dump(const std::string& path);

/// Two-space indented UTF-8 JSON with keys in schema order and a trailing
/// newline; byte-stable for equal dumps.
std::string serialize_dump(const TableDump& dump);

}  // namespace curate
