#include "curate/store.hpp"

#include <sqlite3.h>

#include "curate/error.hpp"

namespace curate {

std::string_view to_string(Phase p) { return p == Phase::Pilot ? "PILOT" : "BATCH"; }

Phase phase_from_string(std::string_view s) {
  if (s == "PILOT") return Phase::Pilot;
  if (s == "BATCH") return Phase::Batch;
  throw Error(ErrorCode::InvalidConfig, "unknown phase: " + std::string(s));
}

std::string_view to_string(AuditKind k) {
  switch (k) {
    case AuditKind::UpdatingValue: return "UPDATING_VALUE";
    case AuditKind::LockingData: return "LOCKING_DATA";
    case AuditKind::SettingIrrelevant: return "SETTING_IRRELEVANT";
    case AuditKind::VettingViewed: return "VETTING_VIEWED";
    case AuditKind::ExplanationRequested: return "EXPLANATION_REQUESTED";
  }
  return "?";
}

AuditKind audit_kind_from_string(std::string_view s) {
  for (auto k : {AuditKind::UpdatingValue, AuditKind::LockingData, AuditKind::SettingIrrelevant,
                 AuditKind::VettingViewed, AuditKind::ExplanationRequested}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown audit kind: " + std::string(s));
}

void to_json(nlohmann::json& j, const ParsedDocument& d) {
  nlohmann::json variants = nlohmann::json::object();
  for (const auto& [kind, v] : d.variants) {
    nlohmann::json paras = nlohmann::json::array();
    for (const auto& p : v.paragraphs) {
      paras.push_back({{"index", p.index}, {"text", p.text}, {"span", {p.char_span.begin, p.char_span.end}}});
    }
    variants[std::string(to_string(kind))] = {{"text", v.text}, {"paragraphs", std::move(paras)}};
  }
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : d.tables) {
    tables.push_back({{"markdown", t.markdown}, {"caption", t.caption}, {"anchor", t.anchor_char_offset}});
  }
  j = {{"doc_id", d.doc_id},       {"source_uri", d.source_uri}, {"variants", std::move(variants)},
       {"tables", std::move(tables)}, {"ocr_applied", d.ocr_applied}, {"failures", d.failures}};
}

void from_json(const nlohmann::json& j, ParsedDocument& d) {
  d = ParsedDocument{};
  d.doc_id = j.at("doc_id").get<std::string>();
  d.source_uri = j.value("source_uri", std::string{});
  for (const auto& [name, v] : j.at("variants").items()) {
    ParsedVariant pv;
    pv.text = v.at("text").get<std::string>();
    for (const auto& p : v.at("paragraphs")) {
      pv.paragraphs.push_back({p.at("index").get<std::size_t>(), p.at("text").get<std::string>(),
                               {p.at("span")[0].get<std::size_t>(), p.at("span")[1].get<std::size_t>()}});
    }
    d.variants[parser_kind_from_string(name)] = std::move(pv);
  }
  for (const auto& t : j.value("tables", nlohmann::json::array())) {
    d.tables.push_back({t.at("markdown").get<std::string>(), t.at("caption").get<std::string>(),
                        t.at("anchor").get<std::size_t>()});
  }
  d.ocr_applied = j.value("ocr_applied", false);
  d.failures = j.value("failures", std::map<std::string, std::string>{});
}

namespace {

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(ErrorCode::IoError, what + ": " + (db ? sqlite3_errmsg(db) : "no database"));
}

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, std::string("prepare ") + sql);
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind_null(int i) {
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string str(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    const std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::IoError, std::string("sqlite: ") + msg);
  }
}

constexpr const char* kSchemaV1 = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS projects (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  name TEXT NOT NULL UNIQUE,
  schema_json TEXT NOT NULL,
  schema_version INTEGER NOT NULL,
  retired_json TEXT NOT NULL DEFAULT '[]',
  pool_version INTEGER NOT NULL DEFAULT 0,
  created_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS documents (
  project_id INTEGER NOT NULL REFERENCES projects(id),
  doc_id TEXT NOT NULL,
  source_uri TEXT NOT NULL,
  parsed_json TEXT,
  error TEXT NOT NULL DEFAULT '',
  PRIMARY KEY (project_id, doc_id));
CREATE TABLE IF NOT EXISTS batches (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  project_id INTEGER NOT NULL REFERENCES projects(id),
  seq INTEGER NOT NULL,
  phase TEXT NOT NULL,
  doc_ids_json TEXT NOT NULL,
  pool_version_used INTEGER NOT NULL,
  failures_json TEXT NOT NULL,
  created_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS records (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  project_id INTEGER NOT NULL REFERENCES projects(id),
  batch_id INTEGER NOT NULL REFERENCES batches(id),
  doc_id TEXT NOT NULL,
  status TEXT NOT NULL,
  record_json TEXT NOT NULL,
  generated_json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS audit (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  project_id INTEGER NOT NULL REFERENCES projects(id),
  actor TEXT NOT NULL,
  kind TEXT NOT NULL,
  record_id INTEGER,
  column_name TEXT NOT NULL,
  before_value TEXT NOT NULL,
  after_value TEXT NOT NULL,
  ts TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS records_by_batch ON records(batch_id);
CREATE INDEX IF NOT EXISTS records_by_project ON records(project_id);
CREATE INDEX IF NOT EXISTS audit_by_project ON audit(project_id);
)sql";

ProjectRow read_project(const Stmt& s) {
  ProjectRow p;
  p.id = s.integer(0);
  p.name = s.str(1);
  p.schema = Schema(nlohmann::json::parse(s.str(2)).get<Schema>().columns(), static_cast<int>(s.integer(3)));
  p.retired = nlohmann::json::parse(s.str(4)).get<std::vector<std::string>>();
  p.pool_version = static_cast<std::uint64_t>(s.integer(5));
  p.created_at = s.str(6);
  return p;
}

constexpr const char* kProjectCols = "id, name, schema_json, schema_version, retired_json, pool_version, created_at";

BatchRow read_batch(const Stmt& s) {
  BatchRow b;
  b.id = s.integer(0);
  b.project_id = s.integer(1);
  b.seq = static_cast<int>(s.integer(2));
  b.phase = phase_from_string(s.str(3));
  b.doc_ids = nlohmann::json::parse(s.str(4)).get<std::vector<std::string>>();
  b.pool_version_used = static_cast<std::uint64_t>(s.integer(5));
  b.failures = nlohmann::json::parse(s.str(6)).get<std::map<std::string, std::string>>();
  b.created_at = s.str(7);
  return b;
}

constexpr const char* kBatchCols = "id, project_id, seq, phase, doc_ids_json, pool_version_used, failures_json, created_at";

StoredRecord read_record(const Stmt& s) {
  StoredRecord r;
  r.record = nlohmann::json::parse(s.str(3)).get<Record>();
  r.record.record_id = s.integer(0);
  r.project_id = s.integer(1);
  r.batch_id = s.integer(2);
  r.generated = nlohmann::json::parse(s.str(4)).get<ValueMap>();
  return r;
}

}  // namespace

Store::Store(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::IoError, "cannot open store " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec(db_, "PRAGMA foreign_keys = ON;");
  const int v = schema_version();
  if (v > kStoreSchemaVersion) {
    throw Error(ErrorCode::IoError, "store schema version " + std::to_string(v) + " is newer than supported");
  }
  if (v < 1) {
    exec(db_, "BEGIN;");
    exec(db_, kSchemaV1);
    exec(db_, "INSERT OR REPLACE INTO meta(key, value) VALUES ('schema_version', '1');");
    exec(db_, "COMMIT;");
  }
}

Store::~Store() { sqlite3_close(db_); }

int Store::schema_version() {
  Stmt probe(db_, "SELECT count(*) FROM sqlite_master WHERE type = 'table' AND name = 'meta'");
  probe.step();
  if (probe.integer(0) == 0) return 0;
  Stmt s(db_, "SELECT value FROM meta WHERE key = 'schema_version'");
  return s.step() ? std::stoi(s.str(0)) : 0;
}

void Store::begin() { exec(db_, "BEGIN IMMEDIATE;"); }
void Store::commit() { exec(db_, "COMMIT;"); }
void Store::rollback() { exec(db_, "ROLLBACK;"); }

std::int64_t Store::insert_project(const std::string& name, const Schema& schema, const std::string& created_at) {
  if (project_by_name(name)) throw Error(ErrorCode::DuplicateName, "project already exists: " + name);
  Stmt s(db_, "INSERT INTO projects(name, schema_json, schema_version, created_at) VALUES (?, ?, ?, ?)");
  s.bind(1, name).bind(2, nlohmann::json(schema).dump()).bind(3, std::int64_t{schema.version()}).bind(4, created_at);
  s.run();
  return sqlite3_last_insert_rowid(db_);
}

std::optional<ProjectRow> Store::project(std::int64_t id) {
  Stmt s(db_, (std::string("SELECT ") + kProjectCols + " FROM projects WHERE id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_project(s);
}

std::optional<ProjectRow> Store::project_by_name(const std::string& name) {
  Stmt s(db_, (std::string("SELECT ") + kProjectCols + " FROM projects WHERE name = ?").c_str());
  s.bind(1, name);
  if (!s.step()) return std::nullopt;
  return read_project(s);
}

std::vector<ProjectRow> Store::projects() {
  Stmt s(db_, (std::string("SELECT ") + kProjectCols + " FROM projects ORDER BY id").c_str());
  std::vector<ProjectRow> out;
  while (s.step()) out.push_back(read_project(s));
  return out;
}

void Store::update_project_schema(std::int64_t id, const Schema& schema, const std::vector<std::string>& retired) {
  Stmt s(db_, "UPDATE projects SET schema_json = ?, schema_version = ?, retired_json = ? WHERE id = ?");
  s.bind(1, nlohmann::json(schema).dump())
      .bind(2, std::int64_t{schema.version()})
      .bind(3, nlohmann::json(retired).dump())
      .bind(4, id);
  s.run();
}

void Store::set_pool_version(std::int64_t id, std::uint64_t version) {
  Stmt s(db_, "UPDATE projects SET pool_version = ? WHERE id = ?");
  s.bind(1, static_cast<std::int64_t>(version)).bind(2, id);
  s.run();
}

void Store::upsert_document(std::int64_t project_id, const DocumentRow& doc) {
  Stmt s(db_,
         "INSERT INTO documents(project_id, doc_id, source_uri, parsed_json, error) VALUES (?, ?, ?, ?, ?) "
         "ON CONFLICT(project_id, doc_id) DO UPDATE SET source_uri = excluded.source_uri, "
         "parsed_json = excluded.parsed_json, error = excluded.error");
  s.bind(1, project_id).bind(2, doc.doc_id).bind(3, doc.source_uri).bind(5, doc.error);
  if (doc.parsed) {
    s.bind(4, nlohmann::json(*doc.parsed).dump());
  } else {
    s.bind_null(4);
  }
  s.run();
}

namespace {

DocumentRow read_document(const Stmt& s) {
  DocumentRow d;
  d.doc_id = s.str(0);
  d.source_uri = s.str(1);
  if (!s.is_null(2)) d.parsed = nlohmann::json::parse(s.str(2)).get<ParsedDocument>();
  d.error = s.str(3);
  return d;
}

}  // namespace

std::optional<DocumentRow> Store::document(std::int64_t project_id, const std::string& doc_id) {
  Stmt s(db_, "SELECT doc_id, source_uri, parsed_json, error FROM documents WHERE project_id = ? AND doc_id = ?");
  s.bind(1, project_id).bind(2, doc_id);
  if (!s.step()) return std::nullopt;
  return read_document(s);
}

std::vector<DocumentRow> Store::documents(std::int64_t project_id) {
  Stmt s(db_, "SELECT doc_id, source_uri, parsed_json, error FROM documents WHERE project_id = ? ORDER BY doc_id");
  s.bind(1, project_id);
  std::vector<DocumentRow> out;
  while (s.step()) out.push_back(read_document(s));
  return out;
}

std::int64_t Store::insert_batch(const BatchRow& b) {
  Stmt s(db_,
         "INSERT INTO batches(project_id, seq, phase, doc_ids_json, pool_version_used, failures_json, created_at) "
         "VALUES (?, ?, ?, ?, ?, ?, ?)");
  s.bind(1, b.project_id)
      .bind(2, std::int64_t{b.seq})
      .bind(3, std::string(to_string(b.phase)))
      .bind(4, nlohmann::json(b.doc_ids).dump())
      .bind(5, static_cast<std::int64_t>(b.pool_version_used))
      .bind(6, nlohmann::json(b.failures).dump())
      .bind(7, b.created_at);
  s.run();
  return sqlite3_last_insert_rowid(db_);
}

std::optional<BatchRow> Store::batch(std::int64_t id) {
  Stmt s(db_, (std::string("SELECT ") + kBatchCols + " FROM batches WHERE id = ?").c_str());
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_batch(s);
}

std::vector<BatchRow> Store::batches(std::int64_t project_id) {
  Stmt s(db_, (std::string("SELECT ") + kBatchCols + " FROM batches WHERE project_id = ? ORDER BY seq").c_str());
  s.bind(1, project_id);
  std::vector<BatchRow> out;
  while (s.step()) out.push_back(read_batch(s));
  return out;
}

std::int64_t Store::insert_record(std::int64_t project_id, std::int64_t batch_id, const Record& record) {
  Stmt s(db_,
         "INSERT INTO records(project_id, batch_id, doc_id, status, record_json, generated_json) "
         "VALUES (?, ?, ?, ?, ?, ?)");
  s.bind(1, project_id)
      .bind(2, batch_id)
      .bind(3, record.doc_id)
      .bind(4, std::string(to_string(record.status)))
      .bind(5, nlohmann::json(record).dump())
      .bind(6, nlohmann::json(record.values()).dump());
  s.run();
  return sqlite3_last_insert_rowid(db_);
}

void Store::update_record(const Record& record) {
  Stmt s(db_, "UPDATE records SET status = ?, record_json = ? WHERE id = ?");
  s.bind(1, std::string(to_string(record.status))).bind(2, nlohmann::json(record).dump()).bind(3, record.record_id);
  s.run();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::NotFound, "no record " + std::to_string(record.record_id));
  }
}

std::optional<StoredRecord> Store::record(std::int64_t id) {
  Stmt s(db_, "SELECT id, project_id, batch_id, record_json, generated_json FROM records WHERE id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return read_record(s);
}

std::vector<StoredRecord> Store::records_of_batch(std::int64_t batch_id) {
  Stmt s(db_, "SELECT id, project_id, batch_id, record_json, generated_json FROM records WHERE batch_id = ? ORDER BY id");
  s.bind(1, batch_id);
  std::vector<StoredRecord> out;
  while (s.step()) out.push_back(read_record(s));
  return out;
}

std::vector<StoredRecord> Store::records_of_project(std::int64_t project_id) {
  Stmt s(db_,
         "SELECT id, project_id, batch_id, record_json, generated_json FROM records WHERE project_id = ? ORDER BY id");
  s.bind(1, project_id);
  std::vector<StoredRecord> out;
  while (s.step()) out.push_back(read_record(s));
  return out;
}

std::int64_t Store::append_audit(const AuditEvent& e) {
  Stmt s(db_,
         "INSERT INTO audit(project_id, actor, kind, record_id, column_name, before_value, after_value, ts) "
         "VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
  s.bind(1, e.project_id).bind(2, e.actor).bind(3, std::string(to_string(e.kind)));
  if (e.record_id) {
    s.bind(4, *e.record_id);
  } else {
    s.bind_null(4);
  }
  s.bind(5, e.column).bind(6, e.before).bind(7, e.after).bind(8, e.timestamp);
  s.run();
  return sqlite3_last_insert_rowid(db_);
}

std::vector<AuditEvent> Store::audit(std::int64_t project_id) {
  Stmt s(db_,
         "SELECT id, project_id, actor, kind, record_id, column_name, before_value, after_value, ts "
         "FROM audit WHERE project_id = ? ORDER BY id");
  s.bind(1, project_id);
  std::vector<AuditEvent> out;
  while (s.step()) {
    AuditEvent e;
    e.event_id = s.integer(0);
    e.project_id = s.integer(1);
    e.actor = s.str(2);
    e.kind = audit_kind_from_string(s.str(3));
    if (!s.is_null(4)) e.record_id = s.integer(4);
    e.column = s.str(5);
    e.before = s.str(6);
    e.after = s.str(7);
    e.timestamp = s.str(8);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace curate
