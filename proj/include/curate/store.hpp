#pragma once

// Single-file SQLite persistence for projects, documents, batches, records
// and the audit log. Not thread-safe; CurationService serializes access.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/ingest.hpp"
#include "curate/record.hpp"

struct sqlite3;

namespace curate {

inline constexpr int kStoreSchemaVersion = 1;

enum class Phase { Pilot, Batch };
std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

enum class AuditKind { UpdatingValue, LockingData, SettingIrrelevant, VettingViewed, ExplanationRequested };
std::string_view to_string(AuditKind k);
AuditKind audit_kind_from_string(std::string_view s);

struct ProjectRow {
  std::int64_t id = 0;
  std::string name;
  Schema schema;
  /// Removed columns whose values are still exported.
  std::vector<std::string> retired;
  std::uint64_t pool_version = 0;
  std::string created_at;
};

struct DocumentRow {
  std::string doc_id;
  std::string source_uri;
  /// Absent when every pipeline failed.
  std::optional<ParsedDocument> parsed;
  std::string error;
};

struct BatchRow {
  std::int64_t id = 0;
  std::int64_t project_id = 0;
  /// 1-based position in the project's history.
  int seq = 0;
  Phase phase = Phase::Pilot;
  std::vector<std::string> doc_ids;
  std::uint64_t pool_version_used = 0;
  std::string created_at;
  /// doc_id -> generation error.
  std::map<std::string, std::string> failures;
};

struct StoredRecord {
  Record record;
  std::int64_t project_id = 0;
  std::int64_t batch_id = 0;
  /// Values as generated, before any edit; the audit log replays over these.
  ValueMap generated;
};

struct AuditEvent {
  std::int64_t event_id = 0;
  std::int64_t project_id = 0;
  std::string actor;
  AuditKind kind = AuditKind::UpdatingValue;
  std::optional<std::int64_t> record_id;
  std::string column;
  std::string before;
  std::string after;
  std::string timestamp;
};

void to_json(nlohmann::json& j, const ParsedDocument& d);
void from_json(const nlohmann::json& j, ParsedDocument& d);

class Store {
 public:
  /// `":memory:"` opens a private in-memory database.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  int schema_version();

  void begin();
  void commit();
  void rollback();

  std::int64_t insert_project(const std::string& name, const Schema& schema, const std::string& created_at);
  std::optional<ProjectRow> project(std::int64_t id);
  std::optional<ProjectRow> project_by_name(const std::string& name);
  std::vector<ProjectRow> projects();
  void update_project_schema(std::int64_t id, const Schema& schema, const std::vector<std::string>& retired);
  void set_pool_version(std::int64_t id, std::uint64_t version);

  void upsert_document(std::int64_t project_id, const DocumentRow& doc);
  std::optional<DocumentRow> document(std::int64_t project_id, const std::string& doc_id);
  /// Ascending doc_id.
  std::vector<DocumentRow> documents(std::int64_t project_id);

  std::int64_t insert_batch(const BatchRow& batch);
  std::optional<BatchRow> batch(std::int64_t id);
  /// Ascending seq.
  std::vector<BatchRow> batches(std::int64_t project_id);

  /// Assigns and returns the record id.
  std::int64_t insert_record(std::int64_t project_id, std::int64_t batch_id, const Record& record);
  void update_record(const Record& record);
  std::optional<StoredRecord> record(std::int64_t id);
  /// Ascending record id.
  std::vector<StoredRecord> records_of_batch(std::int64_t batch_id);
  std::vector<StoredRecord> records_of_project(std::int64_t project_id);

  std::int64_t append_audit(const AuditEvent& event);
  /// Ascending event id.
  std::vector<AuditEvent> audit(std::int64_t project_id);

 private:
  sqlite3* db_ = nullptr;
};

}  // namespace curate
