#include <gtest/gtest.h>

#include "curate/csv.hpp"
#include "curate/error.hpp"
#include "service_fixture.hpp"

using namespace curate;
using curate::testing_support::fixture;
using curate::testing_support::read_all;
using curate::testing_support::ServiceStack;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::unique_ptr<LlmProvider> echo_llm(std::string response) {
  return std::make_unique<FunctionLlmProvider>([response](const std::string&) { return response; }, 8000);
}

}  // namespace

TEST(Project, CreateIngestAndList) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const ProjectView v = s.service->project(id);
  EXPECT_EQ(v.project.schema.names(), (std::vector<std::string>{"Task", "Dataset", "Metric", "Score"}));
  ASSERT_EQ(v.documents.size(), 5u);
  EXPECT_EQ(v.documents[0].doc_id, "img_resnet");
  EXPECT_TRUE(v.documents[0].parsed);
  EXPECT_EQ(v.documents[0].parsed->tables.size(), 1u);
  EXPECT_EQ(s.service->projects().size(), 1u);
  EXPECT_EQ(code_of([&] { s.corpus_project(); }), ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] { s.service->create_project(" ", "A"); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { s.service->create_project("x", ""); }), ErrorCode::SchemaParseError);
  EXPECT_EQ(code_of([&] { s.service->project(99); }), ErrorCode::NotFound);
}

TEST(Project, UnreadableDocumentIsReportedNotFatal) {
  ServiceStack s;
  const auto p = s.service->create_project("p", "A,B");
  const auto summary = s.service->add_documents(p.id, {{"ghost", "/nonexistent/ghost.pdf"}});
  EXPECT_TRUE(summary.ingested.empty());
  EXPECT_NE(summary.failed.at("ghost").find("UnreadableSource"), std::string::npos);
  EXPECT_EQ(code_of([&] { s.service->run_batch(p.id, {"ghost"}, Phase::Pilot); }), ErrorCode::DocsNotIngested);
}

TEST(Batch, PilotMergesPipelinesAndGradesCells) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const BatchView b = s.service->run_batch(id, {"qa_bert", "mt_transformer", "img_resnet"}, Phase::Pilot);
  EXPECT_EQ(b.batch.seq, 1);
  EXPECT_EQ(b.batch.phase, Phase::Pilot);
  EXPECT_TRUE(b.batch.failures.empty());
  const Record& qa = ServiceStack::find(b, "Score", "93.1");
  EXPECT_EQ(qa.origin, Origin::Merged);
  ASSERT_TRUE(qa.alternative);
  EXPECT_EQ(qa.alternative->values.at("Score"), "93.2");
  ASSERT_TRUE(qa.cells.at("Score").provenance);
  EXPECT_EQ(qa.cells.at("Score").provenance->band, Band::Partial);
  EXPECT_EQ(qa.cells.at("Dataset").provenance->ratio, 100);
  EXPECT_EQ(ServiceStack::find(b, "Dataset", "CIFAR-10").cells.at("Score").provenance->band, Band::Unsupported);
  EXPECT_EQ(ServiceStack::find(b, "Score", "19.38").cells.at("Score").provenance->ratio, 100);
}

TEST(Batch, InputValidation) {
  ServiceStack s;
  const auto id = s.corpus_project();
  EXPECT_EQ(code_of([&] { s.service->run_batch(id, {}, Phase::Pilot); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { s.service->run_batch(id, {"qa_bert", "qa_bert"}, Phase::Pilot); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { s.service->run_batch(id, {"qa_bert", "nope"}, Phase::Batch); }),
            ErrorCode::DocsNotIngested);
  std::vector<std::string> eleven;
  for (int i = 0; i < 11; ++i) eleven.push_back("d" + std::to_string(i));
  EXPECT_EQ(code_of([&] { s.service->run_batch(id, eleven, Phase::Pilot); }), ErrorCode::PilotCapExceeded);
  EXPECT_EQ(code_of([&] { s.service->run_batch(id, eleven, Phase::Batch); }), ErrorCode::DocsNotIngested);
}

TEST(Batch, GenerationFailureIsRecordedPerDocument) {
  ServiceStack s(std::make_unique<FunctionLlmProvider>(
      [](const std::string& p) -> std::string {
        if (article_section(p).find("SST-2") != std::string::npos) throw Error(ErrorCode::ServiceUnavailable, "x");
        return R"([{"Task": "t"}])";
      },
      8000));
  const auto id = s.corpus_project();
  const auto b = s.service->run_batch(id, {"qa_bert", "sst_sentiment"}, Phase::Batch);
  EXPECT_EQ(b.batch.failures.count("sst_sentiment"), 1u);
  EXPECT_NE(b.batch.failures.at("sst_sentiment").find("GenerationFailed"), std::string::npos);
  EXPECT_FALSE(b.records.empty());
}

TEST(Batch, ParallelWorkersGiveSameRecords) {
  ServiceSettings four;
  four.jobs = 4;
  ServiceStack a;
  ServiceStack b(nullptr, four);
  const auto pa = a.corpus_project();
  const auto pb = b.corpus_project();
  const auto ra = a.service->run_batch(pa, testing_support::kCorpusIds, Phase::Pilot).records;
  const auto rb = b.service->run_batch(pb, testing_support::kCorpusIds, Phase::Pilot).records;
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(nlohmann::json(ra[i]), nlohmann::json(rb[i]));
}

TEST(StateMachine, Transitions) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const auto b = s.service->run_batch(id, {"qa_bert"}, Phase::Pilot);
  const auto rid = b.records.front().record_id;
  CurationService& svc = *s.service;

  EXPECT_EQ(svc.apply_edit(rid, "Score", "93.2", "u").status, RecordStatus::Edited);
  EXPECT_EQ(code_of([&] { svc.apply_edit(rid, "Nope", "x", "u"); }), ErrorCode::UnknownColumn);
  svc.lock_record(rid, "u");
  EXPECT_EQ(svc.record(rid).status, RecordStatus::Locked);
  EXPECT_EQ(code_of([&] { svc.apply_edit(rid, "Score", "1", "u"); }), ErrorCode::RecordLocked);
  EXPECT_EQ(code_of([&] { svc.lock_record(rid, "u"); }), ErrorCode::AlreadyLocked);
  EXPECT_EQ(code_of([&] { svc.mark_irrelevant(rid, "u"); }), ErrorCode::InvalidTransition);
  svc.unlock_record(rid, "u");
  EXPECT_EQ(svc.record(rid).status, RecordStatus::Edited);
  EXPECT_EQ(code_of([&] { svc.unlock_record(rid, "u"); }), ErrorCode::InvalidTransition);

  svc.mark_irrelevant(rid, "u");
  svc.mark_irrelevant(rid, "u");  // no-op
  EXPECT_EQ(code_of([&] { svc.apply_edit(rid, "Score", "1", "u"); }), ErrorCode::InvalidTransition);
  EXPECT_EQ(code_of([&] { svc.lock_record(rid, "u"); }), ErrorCode::InvalidTransition);
  svc.unmark_irrelevant(rid, "u");
  EXPECT_EQ(svc.record(rid).status, RecordStatus::Edited);
  EXPECT_EQ(code_of([&] { svc.unmark_irrelevant(rid, "u"); }), ErrorCode::InvalidTransition);

  const auto other = b.records.back().record_id;
  svc.mark_irrelevant(other, "u");
  svc.unmark_irrelevant(other, "u");
  EXPECT_EQ(svc.record(other).status, RecordStatus::Generated);
  EXPECT_EQ(code_of([&] { svc.record(9999); }), ErrorCode::NotFound);
}

TEST(Pool, EqualsLockedRecordsAndTracksVersion) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const auto b = s.service->run_batch(id, {"qa_bert", "img_resnet"}, Phase::Pilot);
  EXPECT_TRUE(s.service->pool(id).empty());
  const auto f1 = ServiceStack::find(b, "Metric", "F1").record_id;
  const auto em = ServiceStack::find(b, "Metric", "Exact Match").record_id;
  s.service->lock_record(f1, "u");
  s.service->lock_record(em, "u");
  CorrectionPool pool = s.service->pool(id);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool.entries()[0].doc_id, "qa_bert");
  EXPECT_EQ(pool.entries()[0].records.size(), 2u);
  EXPECT_EQ(pool.version(), 2u);
  s.service->unlock_record(em, "u");
  pool = s.service->pool(id);
  EXPECT_EQ(pool.entries()[0].records.size(), 1u);
  EXPECT_EQ(pool.version(), 3u);
}

TEST(Pool, BatchUsesSnapshotTakenAtStart) {
  ServiceStack* self = nullptr;
  std::int64_t to_lock = 0;
  std::vector<std::string> prompts;
  ServiceStack s(std::make_unique<FunctionLlmProvider>(
      [&](const std::string& p) {
        prompts.push_back(p);
        if (to_lock != 0) {
          self->service->lock_record(to_lock, "curator");  // lands mid-batch
          to_lock = 0;
        }
        return std::string(R"([{"Task": "t", "Score": "1"}])");
      },
      8000));
  self = &s;
  const auto id = s.corpus_project();
  const auto pilot = s.service->run_batch(id, {"qa_bert"}, Phase::Pilot);
  to_lock = pilot.records.front().record_id;
  prompts.clear();
  const auto second = s.service->run_batch(id, {"mt_transformer", "sst_sentiment"}, Phase::Batch);
  EXPECT_EQ(second.batch.pool_version_used, 0u);
  for (const auto& p : prompts) EXPECT_EQ(p.find(std::string(kExampleStart)), std::string::npos);
  EXPECT_EQ(s.service->pool(id).version(), 1u);

  prompts.clear();
  const auto third = s.service->run_batch(id, {"ner_lstm"}, Phase::Batch);
  EXPECT_EQ(third.batch.pool_version_used, 1u);
  ASSERT_FALSE(prompts.empty());
  for (const auto& p : prompts) EXPECT_NE(p.find(std::string(kExampleStart)), std::string::npos);
}

TEST(Audit, EventsReplayToCurrentValues) {
  ServiceStack s;
  const auto g = testing_support::run_golden_scenario(s);
  const auto events = s.service->audit(g.project);
  std::map<std::int64_t, ValueMap> replay;
  std::size_t edits = 0;
  for (const auto& e : events) {
    if (e.kind != AuditKind::UpdatingValue) continue;
    ++edits;
    auto stored = s.store.record(*e.record_id);
    ASSERT_TRUE(stored);
    if (!replay.count(*e.record_id)) replay[*e.record_id] = stored->generated;
    EXPECT_EQ(replay[*e.record_id][e.column], e.before);
    replay[*e.record_id][e.column] = e.after;
  }
  EXPECT_EQ(edits, 3u);
  for (const auto& [rid, values] : replay) EXPECT_EQ(values, s.service->record(rid).values());

  std::size_t locks = 0, irrelevant = 0;
  for (const auto& e : events) {
    locks += e.kind == AuditKind::LockingData;
    irrelevant += e.kind == AuditKind::SettingIrrelevant;
  }
  EXPECT_EQ(locks, 3u);
  EXPECT_EQ(irrelevant, 1u);
  EXPECT_EQ(events.front().actor, "alice");
  EXPECT_EQ(events.front().timestamp.substr(0, 11), "2026-01-01T");
  for (std::size_t i = 1; i < events.size(); ++i) EXPECT_LT(events[i - 1].timestamp, events[i].timestamp);
}

TEST(Audit, SupportAndExplainAreLogged) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const auto b = s.service->run_batch(id, {"qa_bert"}, Phase::Pilot);
  const auto rid = ServiceStack::find(b, "Score", "93.1").record_id;
  const auto paras = s.service->support(rid, "", 3, "carol");
  ASSERT_FALSE(paras.empty());
  EXPECT_NE(paras[0].paragraph.text.find("SQuAD v1.1"), std::string::npos);
  EXPECT_EQ(code_of([&] { s.service->support(rid, "Nope", 3, "carol"); }), ErrorCode::UnknownColumn);
  const auto ex = s.service->explain(rid, "Score", "carol");
  EXPECT_NE(ex.prompt.find("the Score is 93.1"), std::string::npos);
  EXPECT_EQ(code_of([&] { s.service->explain(rid, "Nope", "carol"); }), ErrorCode::UnknownAttribute);
  const auto events = s.service->audit(id);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].kind, AuditKind::VettingViewed);
  EXPECT_EQ(events[1].kind, AuditKind::ExplanationRequested);
  EXPECT_EQ(events[1].after, "93.1");
}

TEST(Provenance, StoredGradesAreReturned) {
  ServiceStack s;
  const auto id = s.corpus_project();
  const auto b = s.service->run_batch(id, {"qa_bert"}, Phase::Pilot);
  const auto rid = ServiceStack::find(b, "Score", "93.1").record_id;
  const auto grades = s.service->provenance(rid);
  EXPECT_EQ(grades.size(), 4u);
  EXPECT_EQ(grades.at("Score").band, Band::Partial);
  s.service->apply_edit(rid, "Score", "93.2", "u");
  EXPECT_EQ(s.service->provenance(rid).at("Score").ratio, 100);
}

TEST(Export, LatestBatchPerDocumentAndIrrelevantFilter) {
  ServiceStack s;
  const auto id = s.corpus_project();
  EXPECT_EQ(code_of([&] { s.service->export_project(id, ExportFormat::Csv); }), ErrorCode::NoBatches);
  const auto first = s.service->run_batch(id, {"qa_bert", "img_resnet"}, Phase::Pilot);
  s.service->mark_irrelevant(ServiceStack::find(first, "Dataset", "CIFAR-10").record_id, "u");
  auto dump = s.service->export_dump(id);
  ASSERT_EQ(dump.documents.size(), 2u);
  EXPECT_EQ(dump.documents[0].doc_id, "img_resnet");
  EXPECT_EQ(dump.documents[0].records.size(), 1u);
  EXPECT_EQ(s.service->export_dump(id, true).documents[0].records.size(), 2u);

  s.service->run_batch(id, {"img_resnet"}, Phase::Batch);  // rerun replaces img_resnet
  dump = s.service->export_dump(id);
  EXPECT_EQ(dump.documents[0].records.size(), 2u);
}

TEST(Export, CsvQuotesAwkwardValues) {
  ServiceStack s(echo_llm(R"([{"Task": "a, \"b\"", "Dataset": "line\nbreak", "Metric": "m", "Score": "1"}])"));
  const auto id = s.corpus_project();
  s.service->run_batch(id, {"sst_sentiment"}, Phase::Pilot);
  const std::string csv_text = s.service->export_project(id, ExportFormat::Csv);
  EXPECT_EQ(csv_text.substr(0, csv_text.find("\r\n")), "doc_id,Task,Dataset,Metric,Score");
  const auto rows = csv::parse(csv_text);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"sst_sentiment", "a, \"b\"", "line\nbreak", "m", "1"}));
}

TEST(Schema, UpdateRetiresRemovedColumns) {
  ServiceStack s;
  const auto id = s.corpus_project();
  s.service->run_batch(id, {"sst_sentiment"}, Phase::Pilot);
  auto p = s.service->update_schema(id, "Task,Dataset,Score,Model");
  EXPECT_EQ(p.schema.version(), 2);
  EXPECT_EQ(p.retired, (std::vector<std::string>{"Metric"}));
  const std::string csv_text = s.service->export_project(id, ExportFormat::Csv);
  EXPECT_EQ(csv_text.substr(0, csv_text.find("\r\n")), "doc_id,Task,Dataset,Score,Model,Metric");
  EXPECT_NE(csv_text.find("Accuracy"), std::string::npos);
  p = s.service->update_schema(id, "Task,Dataset,Metric,Score");
  EXPECT_EQ(p.retired, (std::vector<std::string>{"Model"}));
}

TEST(Store, SurvivesReopen) {
  testing_support::TempDir dir;
  const std::string path = dir.file("curate.db");
  {
    Store store(path);
    store.insert_project("p", Schema::from_names({"A"}), "t0");
  }
  Store again(path);
  EXPECT_EQ(again.schema_version(), kStoreSchemaVersion);
  ASSERT_TRUE(again.project_by_name("p"));
  EXPECT_EQ(again.project_by_name("p")->schema.names(), (std::vector<std::string>{"A"}));
}
