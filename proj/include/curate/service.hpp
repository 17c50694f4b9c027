#pragma once

// Curation workflow over the store: projects, ingestion, pilot and batch
// runs, record actions with audit logging, verification support, export.
//
// Mutations are serialized by one mutex. run_batch copies the correction
// pool under that mutex, generates without it, then commits under it again,
// so corrections made while a batch runs reach only later batches.

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "curate/aligner.hpp"
#include "curate/config.hpp"
#include "curate/dump.hpp"
#include "curate/llm.hpp"
#include "curate/sampler.hpp"
#include "curate/store.hpp"
#include "curate/verify.hpp"

namespace curate {

struct ServiceSettings {
  std::size_t pilot_cap = 10;
  std::size_t jobs = 1;
  GenerationOptions generation;
  double suggest_threshold = kDefaultSuggestThreshold;
  BandThresholds bands;
  FuzzyOptions fuzzy;
  IngestOptions ingest;

  static ServiceSettings from_config(const Config& config);
};

struct ServiceDeps {
  LlmProvider* llm = nullptr;
  EmbeddingProvider* embedding = nullptr;
  PipelineClients parsers;
  /// ISO-8601 timestamps; replaceable for reproducible audit logs.
  std::function<std::string()> clock;
};

struct DocumentSource {
  std::string doc_id;  // empty: derived from the file name
  std::string path;
};

struct IngestSummary {
  std::vector<std::string> ingested;
  /// doc_id -> reason.
  std::map<std::string, std::string> failed;
};

struct ProjectView {
  ProjectRow project;
  std::vector<DocumentRow> documents;
  std::vector<BatchRow> batches;
};

struct BatchView {
  BatchRow batch;
  std::vector<Record> records;
};

enum class ExportFormat { Csv, Json };
ExportFormat export_format_from_string(std::string_view s);

/// Stem of a path with known extractor suffixes removed.
std::string doc_id_from_path(const std::string& path);

std::string iso8601_now();

class CurationService {
 public:
  CurationService(Store& store, ServiceDeps deps, ServiceSettings settings = {});

  /// `schema_contents` is a CSV header (optional hint row) or JSON column list.
  ProjectRow create_project(const std::string& name, const std::string& schema_contents,
                            const std::vector<DocumentSource>& documents = {});
  IngestSummary add_documents(std::int64_t project_id, const std::vector<DocumentSource>& documents);
  ProjectView project(std::int64_t project_id);
  std::vector<ProjectRow> projects();
  /// Removed columns become retired; their values stay in records and exports.
  ProjectRow update_schema(std::int64_t project_id, const std::string& schema_contents);

  BatchView run_batch(std::int64_t project_id, const std::vector<std::string>& doc_ids, Phase phase);
  BatchView batch(std::int64_t batch_id);

  Record record(std::int64_t record_id);
  Record apply_edit(std::int64_t record_id, const std::string& column, const std::string& value,
                    const std::string& actor);
  void lock_record(std::int64_t record_id, const std::string& actor);
  void unlock_record(std::int64_t record_id, const std::string& actor);
  void mark_irrelevant(std::int64_t record_id, const std::string& actor);
  void unmark_irrelevant(std::int64_t record_id, const std::string& actor);

  /// Current pool: LOCKED records grouped by document, version = project
  /// pool version.
  CorrectionPool pool(std::int64_t project_id);

  std::map<std::string, MatchGrade> provenance(std::int64_t record_id);
  /// Emits VETTING_VIEWED. Empty `column` queries with every cell value.
  std::vector<ScoredParagraph> support(std::int64_t record_id, const std::string& column, std::size_t k,
                                       const std::string& actor);
  struct Explanation {
    std::string prompt;
    std::string text;
  };
  /// Emits EXPLANATION_REQUESTED.
  Explanation explain(std::int64_t record_id, const std::string& column, const std::string& actor);

  /// Latest batch per document, documents by ascending doc_id; IRRELEVANT
  /// records are left out unless requested. Throws NoBatches.
  TableDump export_dump(std::int64_t project_id, bool include_irrelevant = false);
  std::string export_project(std::int64_t project_id, ExportFormat format, bool include_irrelevant = false);

  std::vector<AuditEvent> audit(std::int64_t project_id);

  const ServiceSettings& settings() const { return settings_; }

 private:
  ProjectRow require_project(std::int64_t id);
  StoredRecord require_record(std::int64_t id);
  ParsedDocument require_parsed(std::int64_t project_id, const std::string& doc_id);
  CorrectionPool pool_locked(std::int64_t project_id);
  void bump_pool(std::int64_t project_id);
  void audit_event(std::int64_t project_id, const std::string& actor, AuditKind kind,
                   std::optional<std::int64_t> record_id, const std::string& column, const std::string& before,
                   const std::string& after);
  template <typename F>
  auto transaction(F&& f);

  Store& store_;
  ServiceDeps deps_;
  ServiceSettings settings_;
  std::mutex mutex_;
  std::mutex embed_mutex_;
};

}  // namespace curate
