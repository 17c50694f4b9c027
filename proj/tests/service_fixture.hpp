#pragma once

// Offline service stack over the fixture corpus: in-memory store, scripted
// LLM, lexical embeddings, sidecar parsers and a counting clock.

#include <atomic>
#include <cstdio>
#include <memory>

#include "curate/error.hpp"
#include "curate/parser_service.hpp"
#include "curate/service.hpp"
#include "support.hpp"

namespace curate::testing_support {

inline const std::vector<std::string> kCorpusIds = {"qa_bert", "mt_transformer", "img_resnet", "ner_lstm",
                                                    "sst_sentiment"};

inline std::vector<DocumentSource> corpus_sources() {
  std::vector<DocumentSource> out;
  for (const auto& id : kCorpusIds) out.push_back({"", fixture("corpus/" + id + ".pdf")});
  return out;
}

/// 2026-01-01T00:00:SSZ with one second per call.
inline std::function<std::string()> counting_clock() {
  auto n = std::make_shared<std::atomic<int>>(0);
  return [n] {
    const int t = (*n)++;
    char buf[32];
    std::snprintf(buf, sizeof buf, "2026-01-01T%02d:%02d:%02dZ", t / 3600, (t / 60) % 60, t % 60);
    return std::string(buf);
  };
}

struct ServiceStack {
  Store store{":memory:"};
  std::unique_ptr<LlmProvider> llm;
  HashedTfEmbedding embedding{512};
  SidecarParserService tei{ParserKind::StructuredTei};
  SidecarParserService txt{ParserKind::GenericText};
  std::unique_ptr<CurationService> service;

  explicit ServiceStack(std::unique_ptr<LlmProvider> provider = nullptr, ServiceSettings settings = {}) {
    llm = provider ? std::move(provider) : MockLlmProvider::from_file(fixture("mock_llm.json"));
    ServiceDeps deps{llm.get(), &embedding, {&tei, &txt}, counting_clock()};
    service = std::make_unique<CurationService>(store, deps, settings);
  }

  std::int64_t corpus_project(const std::string& name = "demo") {
    return service->create_project(name, read_all(fixture("schema.csv")), corpus_sources()).id;
  }

  /// First record of `batch` whose column equals `value`.
  static const Record& find(const BatchView& batch, const std::string& column, const std::string& value) {
    for (const auto& r : batch.records) {
      if (r.value(column) == value) return r;
    }
    throw Error(ErrorCode::NotFound, "no record with " + column + " = " + value);
  }
};

struct GoldenRun {
  std::int64_t project = 0;
  BatchView pilot;
  BatchView second;
};

/// Pilot on three documents, three corrections locked, one record set
/// aside, then a batch over the remaining two documents.
inline GoldenRun run_golden_scenario(ServiceStack& s) {
  GoldenRun g;
  g.project = s.corpus_project();
  CurationService& svc = *s.service;
  g.pilot = svc.run_batch(g.project, {"qa_bert", "mt_transformer", "img_resnet"}, Phase::Pilot);

  const auto qa = ServiceStack::find(g.pilot, "Score", "93.1").record_id;
  const auto mt = ServiceStack::find(g.pilot, "Metric", "BLEU score").record_id;
  const auto img = ServiceStack::find(g.pilot, "Metric", "Top-1 Error").record_id;
  const auto cifar = ServiceStack::find(g.pilot, "Dataset", "CIFAR-10").record_id;
  svc.apply_edit(qa, "Score", "93.2", "alice");
  svc.apply_edit(mt, "Metric", "BLEU", "alice");
  svc.apply_edit(img, "Metric", "top-1 err.", "bob");
  for (auto id : {qa, mt, img}) svc.lock_record(id, "alice");
  svc.mark_irrelevant(cifar, "bob");

  g.second = svc.run_batch(g.project, {"ner_lstm", "sst_sentiment"}, Phase::Batch);
  return g;
}

}  // namespace curate::testing_support
