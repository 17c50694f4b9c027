#include "curate/service.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <set>
#include <thread>

#include "curate/csv.hpp"
#include "curate/error.hpp"
#include "curate/generator.hpp"
#include "internal.hpp"

namespace curate {

ServiceSettings ServiceSettings::from_config(const Config& c) {
  ServiceSettings s;
  s.pilot_cap = static_cast<std::size_t>(c.get_int("pilot_cap", 10));
  const long long jobs = c.get_int("jobs", 0);
  s.jobs = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  s.generation.window_chars = static_cast<std::size_t>(c.get_int("window", 0));
  s.generation.overlap = c.get_double("overlap", kDefaultOverlap);
  s.generation.shots = static_cast<std::size_t>(c.get_int("m", 1));
  s.generation.bm25 = {c.get_double("k1", 1.2), c.get_double("b", 0.75)};
  s.suggest_threshold = c.get_double("suggest_threshold", kDefaultSuggestThreshold);
  s.bands = {static_cast<int>(c.get_int("band_supported", 90)), static_cast<int>(c.get_int("band_partial", 60))};
  s.fuzzy.scorer = fuzzy_scorer_from_string(c.get("fuzzy_scorer", "partial_ratio"));
  s.ingest.ocr_command = c.get("ocr_command");
  return s;
}

ExportFormat export_format_from_string(std::string_view s) {
  if (s == "csv" || s == "CSV") return ExportFormat::Csv;
  if (s == "json" || s == "JSON") return ExportFormat::Json;
  throw Error(ErrorCode::InvalidConfig, "unknown export format: " + std::string(s));
}

std::string doc_id_from_path(const std::string& path) {
  return detail::sidecar_path(path, "").filename().string();
}

std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CurationService::CurationService(Store& store, ServiceDeps deps, ServiceSettings settings)
    : store_(store), deps_(std::move(deps)), settings_(std::move(settings)) {
  if (!deps_.clock) deps_.clock = iso8601_now;
  if (settings_.jobs == 0) settings_.jobs = 1;
}

template <typename F>
auto CurationService::transaction(F&& f) {
  store_.begin();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      store_.commit();
    } else {
      auto result = f();
      store_.commit();
      return result;
    }
  } catch (...) {
    store_.rollback();
    throw;
  }
}

ProjectRow CurationService::require_project(std::int64_t id) {
  auto p = store_.project(id);
  if (!p) throw Error(ErrorCode::NotFound, "no project " + std::to_string(id));
  return *p;
}

StoredRecord CurationService::require_record(std::int64_t id) {
  auto r = store_.record(id);
  if (!r) throw Error(ErrorCode::NotFound, "no record " + std::to_string(id));
  return *r;
}

ParsedDocument CurationService::require_parsed(std::int64_t project_id, const std::string& doc_id) {
  auto d = store_.document(project_id, doc_id);
  if (!d || !d->parsed) throw Error(ErrorCode::DocsNotIngested, "document not ingested: " + doc_id);
  return *d->parsed;
}

void CurationService::audit_event(std::int64_t project_id, const std::string& actor, AuditKind kind,
                                  std::optional<std::int64_t> record_id, const std::string& column,
                                  const std::string& before, const std::string& after) {
  AuditEvent e;
  e.project_id = project_id;
  e.actor = actor.empty() ? "anonymous" : actor;
  e.kind = kind;
  e.record_id = record_id;
  e.column = column;
  e.before = before;
  e.after = after;
  e.timestamp = deps_.clock();
  store_.append_audit(e);
}

void CurationService::bump_pool(std::int64_t project_id) {
  store_.set_pool_version(project_id, require_project(project_id).pool_version + 1);
}

ProjectRow CurationService::create_project(const std::string& name, const std::string& schema_contents,
                                           const std::vector<DocumentSource>& documents) {
  if (text::trim(name).empty()) throw Error(ErrorCode::InvalidConfig, "project name is empty");
  const Schema schema = Schema::parse_file_contents(schema_contents);
  std::int64_t id = 0;
  {
    std::lock_guard lock(mutex_);
    id = transaction([&] { return store_.insert_project(name, schema, deps_.clock()); });
  }
  if (!documents.empty()) add_documents(id, documents);
  std::lock_guard lock(mutex_);
  return require_project(id);
}

IngestSummary CurationService::add_documents(std::int64_t project_id, const std::vector<DocumentSource>& documents) {
  {
    std::lock_guard lock(mutex_);
    require_project(project_id);
  }
  IngestSummary summary;
  std::vector<DocumentRow> rows;
  for (const auto& src : documents) {
    DocumentRow row;
    row.doc_id = src.doc_id.empty() ? doc_id_from_path(src.path) : src.doc_id;
    row.source_uri = src.path;
    try {
      ParsedDocument parsed = ingest_document(row.doc_id, src.path, deps_.parsers, settings_.ingest);
      if (parsed.failed()) {
        std::vector<std::string> reasons;
        for (const auto& [kind, why] : parsed.failures) reasons.push_back(kind + ": " + why);
        row.error = text::join(reasons, "; ");
      } else {
        row.parsed = std::move(parsed);
      }
    } catch (const Error& e) {
      row.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    if (row.parsed) {
      summary.ingested.push_back(row.doc_id);
    } else {
      summary.failed[row.doc_id] = row.error;
    }
    rows.push_back(std::move(row));
  }
  std::lock_guard lock(mutex_);
  transaction([&] {
    for (const auto& r : rows) store_.upsert_document(project_id, r);
  });
  return summary;
}

ProjectView CurationService::project(std::int64_t project_id) {
  std::lock_guard lock(mutex_);
  return {require_project(project_id), store_.documents(project_id), store_.batches(project_id)};
}

std::vector<ProjectRow> CurationService::projects() {
  std::lock_guard lock(mutex_);
  return store_.projects();
}

ProjectRow CurationService::update_schema(std::int64_t project_id, const std::string& schema_contents) {
  const Schema parsed = Schema::parse_file_contents(schema_contents);
  std::lock_guard lock(mutex_);
  const ProjectRow p = require_project(project_id);
  const Schema next(parsed.columns(), p.schema.version() + 1);
  std::vector<std::string> retired;
  for (const auto& r : p.retired) {
    if (!next.contains(r)) retired.push_back(r);
  }
  for (const auto& c : p.schema.names()) {
    if (!next.contains(c) && std::find(retired.begin(), retired.end(), c) == retired.end()) retired.push_back(c);
  }
  transaction([&] { store_.update_project_schema(project_id, next, retired); });
  return require_project(project_id);
}

CorrectionPool CurationService::pool_locked(std::int64_t project_id) {
  const ProjectRow p = require_project(project_id);
  CorrectionPool pool;
  std::map<std::string, std::string> texts;
  for (const auto& sr : store_.records_of_project(project_id)) {
    if (sr.record.status != RecordStatus::Locked) continue;
    auto it = texts.find(sr.record.doc_id);
    if (it == texts.end()) {
      const ParsedDocument doc = require_parsed(project_id, sr.record.doc_id);
      it = texts.emplace(sr.record.doc_id, doc.prompt_text(*doc.preferred_kind())).first;
    }
    pool.add(sr.record.doc_id, it->second, sr.record.values());
  }
  pool.set_version(p.pool_version);
  return pool;
}

CorrectionPool CurationService::pool(std::int64_t project_id) {
  std::lock_guard lock(mutex_);
  return pool_locked(project_id);
}

BatchView CurationService::run_batch(std::int64_t project_id, const std::vector<std::string>& doc_ids, Phase phase) {
  if (!deps_.llm) throw Error(ErrorCode::InvalidConfig, "no LLM provider configured");
  if (!deps_.embedding) throw Error(ErrorCode::InvalidConfig, "no embedding provider configured");
  if (doc_ids.empty()) throw Error(ErrorCode::InvalidConfig, "batch has no documents");
  if (std::set<std::string>(doc_ids.begin(), doc_ids.end()).size() != doc_ids.size()) {
    throw Error(ErrorCode::InvalidConfig, "batch lists a document twice");
  }
  if (phase == Phase::Pilot && doc_ids.size() > settings_.pilot_cap) {
    throw Error(ErrorCode::PilotCapExceeded, "pilot batch has " + std::to_string(doc_ids.size()) +
                                                 " documents; the cap is " + std::to_string(settings_.pilot_cap));
  }

  Schema schema;
  CorrectionPool snapshot;
  std::vector<ParsedDocument> docs;
  {
    std::lock_guard lock(mutex_);
    schema = require_project(project_id).schema;
    std::vector<std::string> missing;
    for (const auto& id : doc_ids) {
      auto d = store_.document(project_id, id);
      if (!d || !d->parsed) {
        missing.push_back(id);
      } else {
        docs.push_back(std::move(*d->parsed));
      }
    }
    if (!missing.empty()) {
      throw Error(ErrorCode::DocsNotIngested, "documents not ingested: " + text::join(missing, ", "));
    }
    snapshot = pool_locked(project_id);
  }

  std::vector<std::vector<Record>> results(docs.size());
  std::vector<std::string> errors(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        const ParsedDocument& doc = docs[i];
        DualRecordSets sets = generate_records(doc, schema, snapshot, *deps_.llm, settings_.generation);
        std::vector<Record> a = sets.sets[ParserKind::StructuredTei];
        std::vector<Record> b = sets.sets[ParserKind::GenericText];
        std::vector<Record> merged;
        if (deps_.embedding->concurrent_safe()) {
          merged = align_record_sets(a, b, schema, *deps_.embedding, settings_.suggest_threshold);
        } else {
          std::lock_guard lock(embed_mutex_);
          merged = align_record_sets(a, b, schema, *deps_.embedding, settings_.suggest_threshold);
        }
        for (auto& r : merged) {
          r.status = RecordStatus::Generated;
          for (const auto& col : schema.names()) {
            Cell& cell = r.cells[col];
            cell.provenance = provenance_check(cell.value, doc, settings_.bands, settings_.fuzzy);
          }
        }
        results[i] = std::move(merged);
      } catch (const Error& e) {
        errors[i] = std::string(to_string(e.code())) + ": " + e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(settings_.jobs, docs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  std::lock_guard lock(mutex_);
  const std::int64_t batch_id = transaction([&] {
    BatchRow row;
    row.project_id = project_id;
    row.seq = static_cast<int>(store_.batches(project_id).size()) + 1;
    row.phase = phase;
    row.doc_ids = doc_ids;
    row.pool_version_used = snapshot.version();
    row.created_at = deps_.clock();
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (!errors[i].empty()) row.failures[docs[i].doc_id] = errors[i];
    }
    const std::int64_t id = store_.insert_batch(row);
    for (const auto& recs : results) {
      for (const auto& r : recs) store_.insert_record(project_id, id, r);
    }
    return id;
  });
  BatchView view{*store_.batch(batch_id), {}};
  for (auto& sr : store_.records_of_batch(batch_id)) view.records.push_back(std::move(sr.record));
  return view;
}

BatchView CurationService::batch(std::int64_t batch_id) {
  std::lock_guard lock(mutex_);
  auto b = store_.batch(batch_id);
  if (!b) throw Error(ErrorCode::NotFound, "no batch " + std::to_string(batch_id));
  BatchView view{*b, {}};
  for (auto& sr : store_.records_of_batch(batch_id)) view.records.push_back(std::move(sr.record));
  return view;
}

Record CurationService::record(std::int64_t record_id) {
  std::lock_guard lock(mutex_);
  return require_record(record_id).record;
}

Record CurationService::apply_edit(std::int64_t record_id, const std::string& column, const std::string& value,
                                   const std::string& actor) {
  std::lock_guard lock(mutex_);
  StoredRecord sr = require_record(record_id);
  Record& r = sr.record;
  if (r.status == RecordStatus::Locked) throw Error(ErrorCode::RecordLocked, "record is locked");
  if (r.status == RecordStatus::Irrelevant) {
    throw Error(ErrorCode::InvalidTransition, "record is marked irrelevant");
  }
  const ProjectRow p = require_project(sr.project_id);
  if (!p.schema.contains(column)) throw Error(ErrorCode::UnknownColumn, "column not in schema: " + column);
  const ParsedDocument doc = require_parsed(sr.project_id, r.doc_id);
  Cell& cell = r.cells[column];
  const std::string before = cell.value;
  cell.value = value;
  cell.edited = true;
  cell.provenance = provenance_check(value, doc, settings_.bands, settings_.fuzzy);
  r.status = RecordStatus::Edited;
  transaction([&] {
    store_.update_record(r);
    audit_event(sr.project_id, actor, AuditKind::UpdatingValue, record_id, column, before, value);
  });
  return r;
}

void CurationService::lock_record(std::int64_t record_id, const std::string& actor) {
  std::lock_guard lock(mutex_);
  StoredRecord sr = require_record(record_id);
  Record& r = sr.record;
  if (r.status == RecordStatus::Locked) throw Error(ErrorCode::AlreadyLocked, "record is already locked");
  if (r.status == RecordStatus::Irrelevant) {
    throw Error(ErrorCode::InvalidTransition, "an irrelevant record cannot be locked");
  }
  const std::string before(to_string(r.status));
  r.status = RecordStatus::Locked;
  transaction([&] {
    store_.update_record(r);
    bump_pool(sr.project_id);
    audit_event(sr.project_id, actor, AuditKind::LockingData, record_id, "", before, "LOCKED");
  });
}

void CurationService::unlock_record(std::int64_t record_id, const std::string& actor) {
  std::lock_guard lock(mutex_);
  StoredRecord sr = require_record(record_id);
  Record& r = sr.record;
  if (r.status != RecordStatus::Locked) throw Error(ErrorCode::InvalidTransition, "record is not locked");
  r.status = RecordStatus::Edited;
  transaction([&] {
    store_.update_record(r);
    bump_pool(sr.project_id);
    audit_event(sr.project_id, actor, AuditKind::LockingData, record_id, "", "LOCKED", "EDITED");
  });
}

void CurationService::mark_irrelevant(std::int64_t record_id, const std::string& actor) {
  std::lock_guard lock(mutex_);
  StoredRecord sr = require_record(record_id);
  Record& r = sr.record;
  if (r.status == RecordStatus::Irrelevant) return;
  if (r.status == RecordStatus::Locked) {
    throw Error(ErrorCode::InvalidTransition, "a locked record must be unlocked first");
  }
  const std::string before(to_string(r.status));
  r.status = RecordStatus::Irrelevant;
  transaction([&] {
    store_.update_record(r);
    audit_event(sr.project_id, actor, AuditKind::SettingIrrelevant, record_id, "", before, "IRRELEVANT");
  });
}

void CurationService::unmark_irrelevant(std::int64_t record_id, const std::string& actor) {
  std::lock_guard lock(mutex_);
  StoredRecord sr = require_record(record_id);
  Record& r = sr.record;
  if (r.status != RecordStatus::Irrelevant) throw Error(ErrorCode::InvalidTransition, "record is not irrelevant");
  bool edited = false;
  for (const auto& [_, c] : r.cells) edited = edited || c.edited;
  r.status = edited ? RecordStatus::Edited : RecordStatus::Generated;
  transaction([&] {
    store_.update_record(r);
    audit_event(sr.project_id, actor, AuditKind::SettingIrrelevant, record_id, "", "IRRELEVANT",
                std::string(to_string(r.status)));
  });
}

std::map<std::string, MatchGrade> CurationService::provenance(std::int64_t record_id) {
  std::lock_guard lock(mutex_);
  const StoredRecord sr = require_record(record_id);
  std::optional<ParsedDocument> doc;
  std::map<std::string, MatchGrade> out;
  for (const auto& [col, cell] : sr.record.cells) {
    if (cell.provenance) {
      out[col] = *cell.provenance;
      continue;
    }
    if (!doc) doc = require_parsed(sr.project_id, sr.record.doc_id);
    out[col] = provenance_check(cell.value, *doc, settings_.bands, settings_.fuzzy);
  }
  return out;
}

std::vector<ScoredParagraph> CurationService::support(std::int64_t record_id, const std::string& column,
                                                      std::size_t k, const std::string& actor) {
  std::lock_guard lock(mutex_);
  const StoredRecord sr = require_record(record_id);
  const ProjectRow p = require_project(sr.project_id);
  std::vector<std::string> query;
  if (!column.empty()) {
    if (!p.schema.contains(column)) throw Error(ErrorCode::UnknownColumn, "column not in schema: " + column);
    query.push_back(sr.record.value(column));
  } else {
    for (const auto& col : p.schema.names()) {
      if (!sr.record.value(col).empty()) query.push_back(sr.record.value(col));
    }
  }
  const ParsedDocument doc = require_parsed(sr.project_id, sr.record.doc_id);
  auto paragraphs = supporting_paragraphs(query, doc, k, settings_.generation.bm25);
  transaction([&] {
    audit_event(sr.project_id, actor, AuditKind::VettingViewed, record_id, column, "", "");
  });
  return paragraphs;
}

CurationService::Explanation CurationService::explain(std::int64_t record_id, const std::string& column,
                                                      const std::string& actor) {
  if (!deps_.llm) throw Error(ErrorCode::InvalidConfig, "no LLM provider configured");
  Explanation out;
  {
    std::lock_guard lock(mutex_);
    const StoredRecord sr = require_record(record_id);
    const ProjectRow p = require_project(sr.project_id);
    const ParsedDocument doc = require_parsed(sr.project_id, sr.record.doc_id);
    const std::string value = sr.record.value(column);
    out.prompt = build_explanation_prompt(p.schema, column, value, doc.prompt_text(*doc.preferred_kind()));
    transaction([&] {
      audit_event(sr.project_id, actor, AuditKind::ExplanationRequested, record_id, column, "", value);
    });
  }
  out.text = deps_.llm->complete(out.prompt);
  return out;
}

TableDump CurationService::export_dump(std::int64_t project_id, bool include_irrelevant) {
  std::lock_guard lock(mutex_);
  const ProjectRow p = require_project(project_id);
  const auto batches = store_.batches(project_id);
  if (batches.empty()) throw Error(ErrorCode::NoBatches, "project has no batches to export");

  std::map<std::string, std::int64_t> latest;
  for (const auto& b : batches) {
    for (const auto& d : b.doc_ids) latest[d] = b.id;
  }
  std::map<std::int64_t, std::vector<StoredRecord>> by_batch;
  for (const auto& [doc, bid] : latest) {
    if (!by_batch.count(bid)) by_batch[bid] = store_.records_of_batch(bid);
  }

  TableDump dump;
  dump.schema = p.schema.names();
  dump.retired = p.retired;
  for (const auto& [doc, bid] : latest) {
    DumpDocument d{doc, {}};
    for (const auto& sr : by_batch[bid]) {
      if (sr.record.doc_id != doc) continue;
      if (sr.record.status == RecordStatus::Irrelevant && !include_irrelevant) continue;
      d.records.push_back(sr.record.values());
    }
    dump.documents.push_back(std::move(d));
  }
  return dump;
}

std::string CurationService::export_project(std::int64_t project_id, ExportFormat format, bool include_irrelevant) {
  const TableDump dump = export_dump(project_id, include_irrelevant);
  if (format == ExportFormat::Json) return serialize_dump(dump);
  std::vector<std::string> header{"doc_id"};
  header.insert(header.end(), dump.schema.begin(), dump.schema.end());
  header.insert(header.end(), dump.retired.begin(), dump.retired.end());
  std::string out = csv::format_row(header);
  for (const auto& d : dump.documents) {
    for (const auto& r : d.records) {
      std::vector<std::string> row{d.doc_id};
      for (std::size_t i = 1; i < header.size(); ++i) {
        const auto it = r.find(header[i]);
        row.push_back(it == r.end() ? std::string{} : it->second);
      }
      out += csv::format_row(row);
    }
  }
  return out;
}

std::vector<AuditEvent> CurationService::audit(std::int64_t project_id) {
  std::lock_guard lock(mutex_);
  require_project(project_id);
  return store_.audit(project_id);
}

}  // namespace curate
