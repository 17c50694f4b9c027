#include <set>

#include "curate/csv.hpp"
#include "curate/error.hpp"
#include "curate/record.hpp"

namespace curate {

namespace csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += escape(fields[i]);
  }
  return line + "\r\n";
}

std::vector<std::vector<std::string>> parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++i;
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorCode::SchemaParseError, "unterminated quoted CSV field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

}  // namespace csv

Schema::Schema(std::vector<Column> columns, int version) : version_(version) {
  if (columns.empty()) throw Error(ErrorCode::EmptySchema, "schema has no columns");
  std::set<std::string> seen;
  for (auto& c : columns) {
    c.name = text::trim(c.name);
    if (c.name.empty()) throw Error(ErrorCode::SchemaParseError, "empty column name");
    if (!seen.insert(c.name).second) {
      throw Error(ErrorCode::SchemaParseError, "duplicate column name: " + c.name);
    }
  }
  columns_ = std::move(columns);
}

Schema Schema::from_names(const std::vector<std::string>& names) {
  std::vector<Column> cols;
  for (const auto& n : names) cols.push_back({n, std::nullopt});
  return Schema(std::move(cols));
}

Schema Schema::parse_csv(std::string_view contents) {
  std::vector<std::vector<std::string>> rows;
  try {
    rows = csv::parse(contents);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaParseError, e.what());
  }
  if (rows.empty()) throw Error(ErrorCode::SchemaParseError, "schema CSV has no header row");
  std::vector<Column> cols;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    Column c{rows[0][i], std::nullopt};
    if (rows.size() > 1 && i < rows[1].size() && !text::trim(rows[1][i]).empty()) {
      c.example_hint = text::trim(rows[1][i]);
    }
    cols.push_back(std::move(c));
  }
  if (cols.size() == 1 && text::trim(cols[0].name).empty()) {
    throw Error(ErrorCode::SchemaParseError, "schema CSV header is empty");
  }
  return Schema(std::move(cols));
}

Schema Schema::parse_json(std::string_view contents) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(contents);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaParseError, std::string("schema JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("columns")) j = j["columns"];
  if (!j.is_array()) throw Error(ErrorCode::SchemaParseError, "schema JSON must be a list of columns");
  std::vector<Column> cols;
  for (const auto& item : j) {
    if (item.is_string()) {
      cols.push_back({item.get<std::string>(), std::nullopt});
    } else if (item.is_object() && item.contains("name") && item["name"].is_string()) {
      Column c{item["name"].get<std::string>(), std::nullopt};
      if (item.contains("example") && item["example"].is_string()) c.example_hint = item["example"].get<std::string>();
      cols.push_back(std::move(c));
    } else {
      throw Error(ErrorCode::SchemaParseError, "schema column must be a string or {name, example}");
    }
  }
  return Schema(std::move(cols));
}

Schema Schema::parse_file_contents(std::string_view contents) {
  const std::string trimmed = text::trim(contents);
  if (trimmed.empty()) throw Error(ErrorCode::SchemaParseError, "schema file is empty");
  if (trimmed[0] == '[' || trimmed[0] == '{') return parse_json(trimmed);
  return parse_csv(contents);
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

bool Schema::contains(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return true;
  }
  return false;
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::StructuredTei: return "STRUCTURED_TEI";
    case Origin::GenericText: return "GENERIC_TEXT";
    case Origin::Merged: return "MERGED";
  }
  return "?";
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::Generated: return "GENERATED";
    case RecordStatus::Edited: return "EDITED";
    case RecordStatus::Locked: return "LOCKED";
    case RecordStatus::Irrelevant: return "IRRELEVANT";
  }
  return "?";
}

std::string_view to_string(Band b) {
  switch (b) {
    case Band::Supported: return "SUPPORTED";
    case Band::Partial: return "PARTIAL";
    case Band::Unsupported: return "UNSUPPORTED";
  }
  return "?";
}

Origin origin_from_string(std::string_view s) {
  if (s == "STRUCTURED_TEI") return Origin::StructuredTei;
  if (s == "GENERIC_TEXT") return Origin::GenericText;
  if (s == "MERGED") return Origin::Merged;
  throw Error(ErrorCode::MalformedDump, "unknown origin: " + std::string(s));
}

RecordStatus status_from_string(std::string_view s) {
  if (s == "GENERATED") return RecordStatus::Generated;
  if (s == "EDITED") return RecordStatus::Edited;
  if (s == "LOCKED") return RecordStatus::Locked;
  if (s == "IRRELEVANT") return RecordStatus::Irrelevant;
  throw Error(ErrorCode::MalformedDump, "unknown status: " + std::string(s));
}

Band band_from_string(std::string_view s) {
  if (s == "SUPPORTED") return Band::Supported;
  if (s == "PARTIAL") return Band::Partial;
  if (s == "UNSUPPORTED") return Band::Unsupported;
  throw Error(ErrorCode::MalformedDump, "unknown band: " + std::string(s));
}

Origin origin_of(ParserKind kind) {
  return kind == ParserKind::StructuredTei ? Origin::StructuredTei : Origin::GenericText;
}

std::string Record::value(const std::string& column) const {
  const auto it = cells.find(column);
  return it == cells.end() ? std::string{} : it->second.value;
}

ValueMap Record::values() const {
  ValueMap out;
  for (const auto& [k, c] : cells) out[k] = c.value;
  return out;
}

Record Record::from_values(std::string doc_id, const ValueMap& values, Origin origin) {
  Record r;
  r.doc_id = std::move(doc_id);
  r.origin = origin;
  for (const auto& [k, v] : values) r.cells[k].value = v;
  return r;
}

std::string records_to_json(const std::vector<ValueMap>& records, const Schema& schema) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& rec : records) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& col : schema.columns()) {
      const auto it = rec.find(col.name);
      obj[col.name] = it == rec.end() ? std::string{} : it->second;
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

void to_json(nlohmann::json& j, const MatchGrade& g) {
  j = {{"ratio", g.ratio}, {"band", to_string(g.band)}};
  if (g.best_span) j["best_span"] = {g.best_span->begin, g.best_span->end};
  if (g.span_variant) j["span_variant"] = to_string(*g.span_variant);
}

void from_json(const nlohmann::json& j, MatchGrade& g) {
  g.ratio = j.at("ratio").get<int>();
  g.band = band_from_string(j.at("band").get<std::string>());
  if (j.contains("best_span")) {
    g.best_span = text::Span{j["best_span"][0].get<std::size_t>(), j["best_span"][1].get<std::size_t>()};
  }
  if (j.contains("span_variant")) g.span_variant = parser_kind_from_string(j["span_variant"].get<std::string>());
}

void to_json(nlohmann::json& j, const Record& r) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [k, c] : r.cells) {
    nlohmann::json cell = {{"value", c.value}, {"edited", c.edited}};
    if (c.provenance) cell["provenance"] = *c.provenance;
    cells[k] = std::move(cell);
  }
  j = {{"record_id", r.record_id},
       {"doc_id", r.doc_id},
       {"origin", to_string(r.origin)},
       {"status", to_string(r.status)},
       {"cells", std::move(cells)}};
  if (r.alternative) {
    j["alternative"] = {{"values", r.alternative->values},
                        {"origin", to_string(r.alternative->origin)},
                        {"score", r.alternative->score}};
  }
}

void from_json(const nlohmann::json& j, Record& r) {
  r.record_id = j.value("record_id", std::int64_t{0});
  r.doc_id = j.at("doc_id").get<std::string>();
  r.origin = origin_from_string(j.value("origin", std::string("STRUCTURED_TEI")));
  r.status = status_from_string(j.value("status", std::string("GENERATED")));
  r.cells.clear();
  for (const auto& [k, c] : j.at("cells").items()) {
    Cell cell;
    cell.value = c.at("value").get<std::string>();
    cell.edited = c.value("edited", false);
    if (c.contains("provenance")) cell.provenance = c["provenance"].get<MatchGrade>();
    r.cells[k] = std::move(cell);
  }
  r.alternative.reset();
  if (j.contains("alternative") && !j["alternative"].is_null()) {
    const auto& a = j["alternative"];
    r.alternative = Alternative{a.at("values").get<ValueMap>(),
                                origin_from_string(a.at("origin").get<std::string>()),
                                a.at("score").get<double>()};
  }
}

void to_json(nlohmann::json& j, const Schema& s) {
  j = nlohmann::json::array();
  for (const auto& c : s.columns()) {
    nlohmann::json col = {{"name", c.name}};
    if (c.example_hint) col["example"] = *c.example_hint;
    j.push_back(std::move(col));
  }
}

void from_json(const nlohmann::json& j, Schema& s) { s = Schema::parse_json(j.dump()); }

}  // namespace curate
