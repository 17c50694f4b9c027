#include "curate/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "curate/error.hpp"
#include "curate/parser_service.hpp"
#include "internal.hpp"

namespace curate {

namespace fs = std::filesystem;

std::string_view to_string(ParserKind kind) {
  return kind == ParserKind::StructuredTei ? "STRUCTURED_TEI" : "GENERIC_TEXT";
}

ParserKind parser_kind_from_string(std::string_view s) {
  if (s == "STRUCTURED_TEI") return ParserKind::StructuredTei;
  if (s == "GENERIC_TEXT") return ParserKind::GenericText;
  throw Error(ErrorCode::InvalidConfig, "unknown parser kind: " + std::string(s));
}

std::optional<ParserKind> ParsedDocument::preferred_kind() const {
  for (ParserKind k : kParserKinds) {
    if (has(k)) return k;
  }
  return std::nullopt;
}

std::string ParsedDocument::prompt_text(ParserKind kind) const {
  const auto it = variants.find(kind);
  if (it == variants.end()) return {};
  if (kind == preferred_kind()) return merge_tables(it->second.text, tables);
  return it->second.text;
}

namespace detail {

ParsedVariant variant_from_paragraphs(const std::vector<std::string>& paragraphs) {
  ParsedVariant v;
  std::size_t offset = 0;
  for (const auto& p : paragraphs) {
    if (!v.paragraphs.empty()) {
      v.text += "\n\n";
      offset += 2;
    }
    const std::size_t len = text::length(p);
    v.paragraphs.push_back({v.paragraphs.size(), p, {offset, offset + len}});
    v.text += p;
    offset += len;
  }
  return v;
}

}  // namespace detail

ParsedVariant segment_paragraphs(std::string_view raw) {
  std::string normalized;
  normalized.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      if (i + 1 < raw.size() && raw[i + 1] == '\n') continue;
      normalized += '\n';
    } else {
      normalized += raw[i];
    }
  }
  std::vector<std::string> paragraphs;
  std::string current;
  auto flush = [&] {
    std::string t = text::trim(current);
    if (!t.empty()) paragraphs.push_back(std::move(t));
    current.clear();
  };
  for (const auto& line : text::split(normalized, '\n')) {
    if (text::trim(line).empty()) {
      flush();
    } else {
      if (!current.empty()) current += '\n';
      current += line;
    }
  }
  flush();
  return detail::variant_from_paragraphs(paragraphs);
}

TextLayerProbe probe_source(const std::string& path) {
  TextLayerProbe probe;
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) return probe;
  probe.size_bytes = static_cast<std::size_t>(size);
  std::ifstream in(path, std::ios::binary);
  if (!in || size == 0) return probe;
  probe.readable = true;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.rfind("%PDF", 0) != 0) {
    probe.has_text_layer = true;
  } else {
    // A PDF without any font resource has no text to extract.
    probe.has_text_layer = bytes.find("/Font") != std::string::npos;
  }
  return probe;
}

IngestPlan route_document(const TextLayerProbe& probe) {
  if (!probe.readable || probe.size_bytes == 0) {
    throw Error(ErrorCode::UnreadableSource, "source is empty or cannot be read");
  }
  IngestPlan plan;
  plan.ocr = !probe.has_text_layer;
  plan.parsers.assign(std::begin(kParserKinds), std::end(kParserKinds));
  return plan;
}

ParsedVariant parse_variant(const SourceFile& source, ParserKind kind, ParserServiceClient& service) {
  const std::string raw = service.extract(source);
  ParsedVariant v = kind == ParserKind::StructuredTei ? tei_to_variant(raw) : segment_paragraphs(raw);
  if (v.text.empty()) {
    throw Error(ErrorCode::EmptyExtraction,
                std::string(to_string(kind)) + " extracted no text from " + source.path);
  }
  return v;
}

std::string merge_tables(std::string_view text_in, std::vector<TableBlock> tables) {
  if (tables.empty()) return std::string(text_in);
  std::sort(tables.begin(), tables.end(), [](const TableBlock& a, const TableBlock& b) {
    return std::tie(a.anchor_char_offset, a.caption, a.markdown) <
           std::tie(b.anchor_char_offset, b.caption, b.markdown);
  });
  const std::u32string src = text::to_u32(text_in);

  std::vector<std::size_t> boundaries;
  for (std::size_t i = 0; i + 1 < src.size(); ++i) {
    if (src[i] == U'\n' && src[i + 1] == U'\n' && (i == 0 || src[i - 1] != U'\n')) {
      boundaries.push_back(i);
    }
  }
  boundaries.push_back(src.size());

  std::map<std::size_t, std::u32string> inserts;
  for (const auto& t : tables) {
    const std::size_t anchor = std::min(t.anchor_char_offset, src.size());
    const std::size_t at = *std::lower_bound(boundaries.begin(), boundaries.end(), anchor);
    std::u32string& block = inserts[at];
    block += U"\n\n";
    if (!t.caption.empty()) block += text::to_u32(t.caption) + U"\n\n";
    block += text::to_u32(t.markdown);
  }

  std::u32string out;
  std::size_t pos = 0;
  for (const auto& [at, block] : inserts) {
    out.append(src, pos, at - pos);
    out += block;
    pos = at;
  }
  out.append(src, pos, std::u32string::npos);
  return text::to_utf8(out);
}

std::vector<Chunk> chunk_text(std::string_view text_in, std::size_t window_chars, double overlap_fraction) {
  if (window_chars == 0) throw Error(ErrorCode::InvalidConfig, "window must be at least 1 character");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "overlap fraction must lie in [0, 1)");
  }
  const auto overlap = static_cast<std::size_t>(
      std::floor(static_cast<double>(window_chars) * overlap_fraction));
  const std::size_t stride = window_chars - overlap;
  if (stride == 0) throw Error(ErrorCode::InvalidConfig, "chunk stride would be zero");

  const auto offsets = text::code_point_offsets(text_in);
  const std::size_t len = offsets.size() - 1;
  auto make = [&](std::size_t b, std::size_t e) {
    Chunk c;
    c.span = {b, e};
    c.text = std::string(text_in.substr(offsets[b], offsets[e] - offsets[b]));
    return c;
  };
  std::vector<Chunk> chunks;
  if (len <= window_chars) {
    chunks.push_back(make(0, len));
    return chunks;
  }
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + window_chars, len);
    chunks.push_back(make(start, end));
    if (end == len) break;
  }
  return chunks;
}

std::string detail::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableSource, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string run_ocr(const std::string& command, const std::string& input) {
  if (command.empty()) {
    throw Error(ErrorCode::UnreadableSource, "no text layer in " + input + " and no OCR command configured");
  }
  const fs::path output = fs::temp_directory_path() /
      ("curate-ocr-" + text::hex64(text::fnv1a64(input)) + ".pdf");
  std::string cmd = replace_all(command, "{input}", shell_quote(input));
  cmd = replace_all(cmd, "{output}", shell_quote(output.string()));
  if (std::system(cmd.c_str()) != 0 || !fs::exists(output)) {
    throw Error(ErrorCode::UnreadableSource, "OCR command failed for " + input);
  }
  return output.string();
}

}  // namespace

fs::path detail::sidecar_path(const std::string& source_path, const std::string& suffix) {
  fs::path p(source_path);
  std::string name = p.filename().string();
  for (const char* ext : {".tei.xml", ".tables.json", ".txt", ".pdf", ".xml"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      name.resize(name.size() - e.size());
      break;
    }
  }
  return p.parent_path() / (name + suffix);
}

ParsedDocument ingest_document(const std::string& doc_id, const std::string& source_path,
                               const PipelineClients& clients, const IngestOptions& options) {
  ParsedDocument doc;
  doc.doc_id = doc_id;
  doc.source_uri = source_path;

  const IngestPlan plan = route_document(probe_source(source_path));
  std::string parse_path = source_path;
  if (plan.ocr) {
    parse_path = run_ocr(options.ocr_command, source_path);
    doc.ocr_applied = true;
  }
  const SourceFile source{parse_path, detail::read_file(parse_path)};
  // Bytes come from the OCR output when it ran; sidecars are located next
  // to the original upload.
  const SourceFile lookup{source_path, source.bytes};

  for (ParserKind kind : plan.parsers) {
    ParserServiceClient* client = kind == ParserKind::StructuredTei ? clients.structured : clients.generic;
    if (client == nullptr) {
      doc.failures[std::string(to_string(kind))] = "no client configured";
      continue;
    }
    try {
      doc.variants[kind] = parse_variant(lookup, kind, *client);
    } catch (const Error& e) {
      doc.failures[std::string(to_string(kind))] = std::string(to_string(e.code())) + ": " + e.what();
    }
  }

  const fs::path tables_path = detail::sidecar_path(source_path, ".tables.json");
  if (fs::exists(tables_path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(tables_path.string()));
    } catch (const nlohmann::json::exception& e) {
      doc.failures["tables"] = std::string("unreadable table sidecar: ") + e.what();
    }
    std::size_t index = 0;
    const auto host = doc.preferred_kind();
    const std::size_t host_len = host ? text::length(doc.variants.at(*host).text) : 0;
    for (const auto& t : j.is_array() ? j : nlohmann::json::array()) {
      try {
        TableBlock block;
        block.markdown = html_table_to_markdown(t.value("html", ""));
        block.caption = t.value("caption", "");
        block.anchor_char_offset = std::min<std::size_t>(t.value("anchor", std::size_t{0}), host_len);
        doc.tables.push_back(std::move(block));
      } catch (const Error& e) {
        doc.failures["table " + std::to_string(index)] = e.what();
      }
      ++index;
    }
    std::stable_sort(doc.tables.begin(), doc.tables.end(), [](const TableBlock& a, const TableBlock& b) {
      return a.anchor_char_offset < b.anchor_char_offset;
    });
  }
  return doc;
}

}  // namespace curate
