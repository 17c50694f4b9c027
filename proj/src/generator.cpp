#include "curate/generator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <set>

#include "curate/error.hpp"
#include "curate/sampler.hpp"

namespace curate {

namespace {

std::string mapping_hint(const Column& column, const std::vector<ICLExample>& examples) {
  if (!examples.empty() && !examples.front().records.empty()) {
    const auto& first = examples.front().records.front();
    const auto it = first.find(column.name);
    if (it != first.end() && !it->second.empty()) return text::collapse_whitespace(it->second);
  }
  return column.example_hint ? text::collapse_whitespace(*column.example_hint) : std::string{};
}

/// Closing bracket matching the opening one at `start`, honouring strings.
std::size_t matching_bracket(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::mutex& serial_llm_mutex() {
  static std::mutex m;
  return m;
}

std::string call_llm(LlmProvider& llm, const std::string& prompt) {
  if (llm.concurrent_safe()) return llm.complete(prompt);
  std::lock_guard lock(serial_llm_mutex());
  return llm.complete(prompt);
}

}  // namespace

std::string build_prompt(const Schema& schema, std::string_view article_text,
                         const std::vector<ICLExample>& examples) {
  if (schema.size() == 0) throw Error(ErrorCode::EmptySchema, "schema has no columns");
  std::string p = "Please, extract " + text::join(schema.names(), ", ") + " from the given article.\n\n";
  p += "For the extracted information, you MUST respond in a list of JSON dictionaries structure "
       "with the given Dictionary Key Mapping.\n\n";
  p += "[Dictionary Key Mapping in your response]\n{\n";
  const auto& cols = schema.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    p += cols[i].name + ": (example: " + mapping_hint(cols[i], examples) + ")";
    p += i + 1 < cols.size() ? ",\n" : "\n";
  }
  p += "}\n\n";
  for (const auto& ex : examples) {
    p += std::string(kExampleStart) + "\n" + ex.source_doc_excerpt + "\n" + std::string(kExampleEnd) + "\n";
    p += std::string(kExampleResponse) + "\n" + records_to_json(ex.records, schema) + "\n\n";
  }
  p += std::string(kArticleStart) + "\n";
  p += article_text;
  p += "\n" + std::string(kArticleEnd) + "\n";
  return p;
}

std::string stringify_json_value(const nlohmann::json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::string: return v.get<std::string>();
    case nlohmann::json::value_t::null: return {};
    case nlohmann::json::value_t::boolean: return v.get<bool>() ? "true" : "false";
    case nlohmann::json::value_t::number_integer: return std::to_string(v.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return std::to_string(v.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, d);
      return std::string(buf, res.ptr);
    }
    default: return v.dump();
  }
}

std::vector<ValueMap> parse_llm_output(std::string_view raw, const Schema& schema) {
  for (std::size_t pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
    const std::size_t end = matching_bracket(raw, pos);
    if (end == std::string_view::npos) continue;
    nlohmann::json j = nlohmann::json::parse(raw.substr(pos, end - pos + 1), nullptr, false);
    if (j.is_discarded() || !j.is_array()) continue;
    if (!std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_object(); })) continue;

    std::vector<ValueMap> records;
    for (const auto& obj : j) {
      ValueMap rec;
      for (const auto& col : schema.columns()) rec[col.name] = {};
      for (const auto& [key, value] : obj.items()) {
        const std::string name = text::trim(key);
        if (schema.contains(name)) rec[name] = stringify_json_value(value);
      }
      records.push_back(std::move(rec));
    }
    return records;
  }
  throw Error(ErrorCode::OutputUnparseable, "no JSON array of objects in LLM output");
}

std::size_t effective_window(const GenerationOptions& options, const LlmProvider& llm) {
  if (options.window_chars > 0) return options.window_chars;
  const double usable = static_cast<double>(llm.context_chars()) * (1.0 - options.overhead_fraction);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(usable)));
}

DualRecordSets generate_records_with_examples(const ParsedDocument& doc, const Schema& schema,
                                              const std::vector<ICLExample>& examples, LlmProvider& llm,
                                              const GenerationOptions& options) {
  if (doc.failed()) throw Error(ErrorCode::GenerationFailed, "document " + doc.doc_id + " has no text variant");
  DualRecordSets out;
  out.examples_used = examples.size();
  const std::size_t window = effective_window(options, llm);

  for (ParserKind kind : kParserKinds) {
    if (!doc.has(kind)) continue;
    const auto chunks = chunk_text(doc.prompt_text(kind), window, options.overlap);
    std::vector<Record> records;
    std::set<std::string> seen;
    std::size_t failed_chunks = 0;
    VariantFailure failure;
    for (const auto& chunk : chunks) {
      const std::string prompt = build_prompt(schema, chunk.text, examples);
      std::string raw;
      try {
        raw = call_llm(llm, prompt);
        std::vector<ValueMap> parsed;
        try {
          parsed = parse_llm_output(raw, schema);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::OutputUnparseable) throw;
          raw = call_llm(llm, prompt + "\n" + std::string(kJsonOnlyReminder) + "\n");
          parsed = parse_llm_output(raw, schema);
        }
        for (const auto& values : parsed) {
          if (!seen.insert(records_to_json({values}, schema)).second) continue;
          records.push_back(Record::from_values(doc.doc_id, values, origin_of(kind)));
        }
      } catch (const Error& e) {
        ++failed_chunks;
        failure.message = std::string(to_string(e.code())) + ": " + e.what();
        if (e.code() == ErrorCode::OutputUnparseable) failure.raw_output = raw;
      }
    }
    if (failed_chunks > 0) {
      if (failed_chunks < chunks.size()) {
        failure.message = std::to_string(failed_chunks) + " of " + std::to_string(chunks.size()) +
                          " chunks failed; last: " + failure.message;
      }
      out.failures[kind] = failure;
    }
    if (failed_chunks < chunks.size()) out.sets[kind] = std::move(records);
  }
  if (out.sets.empty()) {
    std::string why;
    for (const auto& [kind, f] : out.failures) why += std::string(to_string(kind)) + ": " + f.message + "; ";
    throw Error(ErrorCode::GenerationFailed, "no variant of " + doc.doc_id + " produced records: " + why);
  }
  return out;
}

DualRecordSets generate_records(const ParsedDocument& doc, const Schema& schema, const CorrectionPool& pool,
                                LlmProvider& llm, const GenerationOptions& options) {
  const auto preferred = doc.preferred_kind();
  if (!preferred) throw Error(ErrorCode::GenerationFailed, "document " + doc.doc_id + " has no text variant");

  std::vector<ICLExample> examples;
  if (!pool.empty() && options.shots > 0) {
    // Examples share the reserved prompt overhead with the instructions.
    const auto overhead = static_cast<std::size_t>(static_cast<double>(llm.context_chars()) * options.overhead_fraction);
    const std::size_t instructions = text::length(build_prompt(schema, "", {}));
    const std::size_t per_example = overhead > instructions ? (overhead - instructions) / options.shots : 0;
    examples = select_icl_examples(doc.prompt_text(*preferred), pool, options.shots, options.bm25,
                                   std::numeric_limits<std::size_t>::max());
    for (auto& ex : examples) {
      const std::size_t records_len = text::length(records_to_json(ex.records, schema));
      const std::size_t budget = per_example > records_len ? per_example - records_len : 0;
      if (text::length(ex.source_doc_excerpt) > budget) ex.source_doc_excerpt = text::slice(ex.source_doc_excerpt, {0, budget});
    }
  }
  return generate_records_with_examples(doc, schema, examples, llm, options);
}

}  // namespace curate
