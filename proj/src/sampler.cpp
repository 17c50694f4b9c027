#include "curate/sampler.hpp"

#include <algorithm>
#include <filesystem>

#include "curate/error.hpp"
#include "internal.hpp"

namespace curate {

namespace fs = std::filesystem;

void CorrectionPool::add(const std::string& doc_id, const std::string& text, const ValueMap& record) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), doc_id,
                             [](const PoolEntry& e, const std::string& id) { return e.doc_id < id; });
  if (it == entries_.end() || it->doc_id != doc_id) it = entries_.insert(it, PoolEntry{doc_id, text, {}});
  it->records.push_back(record);
}

void CorrectionPool::add_entry(PoolEntry entry) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), entry.doc_id,
                             [](const PoolEntry& e, const std::string& id) { return e.doc_id < id; });
  if (it != entries_.end() && it->doc_id == entry.doc_id) {
    throw Error(ErrorCode::InvalidConfig, "duplicate pool entry: " + entry.doc_id);
  }
  entries_.insert(it, std::move(entry));
}

const PoolEntry* CorrectionPool::find(const std::string& doc_id) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), doc_id,
                                   [](const PoolEntry& e, const std::string& id) { return e.doc_id < id; });
  return it != entries_.end() && it->doc_id == doc_id ? &*it : nullptr;
}

std::vector<ScoredDoc> rank_pool(std::string_view target_text, const CorrectionPool& pool, Bm25Params params) {
  if (pool.empty()) return {};
  std::vector<std::pair<std::string, std::string>> corpus;
  corpus.reserve(pool.size());
  for (const auto& e : pool.entries()) corpus.emplace_back(e.doc_id, e.text);
  const Bm25Index index = Bm25Index::build(corpus, params);
  const auto query = text::tokenize(target_text);
  return index.rank(query);
}

std::vector<ICLExample> select_icl_examples(std::string_view target_text, const CorrectionPool& pool,
                                            std::size_t m, Bm25Params params, std::size_t max_excerpt_chars) {
  std::vector<ICLExample> out;
  if (m == 0) return out;
  for (const auto& scored : rank_pool(target_text, pool, params)) {
    if (out.size() == m) break;
    const PoolEntry* entry = pool.find(scored.doc_id);
    ICLExample ex;
    ex.source_doc_excerpt = text::length(entry->text) > max_excerpt_chars
                                ? text::slice(entry->text, {0, max_excerpt_chars})
                                : entry->text;
    ex.records = entry->records;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::size_t> random_sample(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  k = std::min(k, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Bounded draws by rejection so the sequence depends only on the engine.
  auto bounded = [&rng](std::uint64_t range) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = 0;
    do {
      x = rng();
    } while (x >= limit);
    return x % range;
  };
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SimulationResult simulate_curation(const SimulationConfig& cfg) {
  if (cfg.dataset.empty()) throw Error(ErrorCode::EmptyCorpus, "simulation dataset has no documents");
  if (cfg.llm == nullptr) throw Error(ErrorCode::InvalidConfig, "simulation needs an LLM provider");
  SimulationResult result;
  result.table.schema = cfg.schema.names();
  std::mt19937_64 rng(cfg.seed);
  GenerationOptions gen = cfg.generation;
  gen.shots = cfg.shots;

  const std::size_t n = cfg.dataset.size();
  for (std::size_t t = 0; t < n; ++t) {
    const SimulationDoc& test = cfg.dataset[t];
    std::vector<std::size_t> candidates;
    candidates.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != t) candidates.push_back(i);
    }
    CorrectionPool pool;
    std::vector<std::string> pool_ids;
    for (std::size_t pick : random_sample(candidates.size(), cfg.pool_size, rng)) {
      const SimulationDoc& train = cfg.dataset[candidates[pick]];
      const auto kind = train.document.preferred_kind();
      pool.add_entry({train.document.doc_id, kind ? train.document.prompt_text(*kind) : std::string{}, train.gold});
      pool_ids.push_back(train.document.doc_id);
    }
    if (cfg.on_pool) cfg.on_pool(test.document.doc_id, pool_ids);

    DumpDocument out{test.document.doc_id, {}};
    try {
      const DualRecordSets sets = generate_records(test.document, cfg.schema, pool, *cfg.llm, gen);
      const auto kind = test.document.preferred_kind();
      auto it = kind ? sets.sets.find(*kind) : sets.sets.end();
      if (it == sets.sets.end()) it = sets.sets.begin();
      if (it != sets.sets.end()) {
        for (const auto& r : it->second) out.records.push_back(r.values());
      }
    } catch (const Error& e) {
      result.errors[test.document.doc_id] = std::string(to_string(e.code())) + ": " + e.what();
    }
    result.table.documents.push_back(std::move(out));
  }
  return result;
}

std::vector<SimulationDoc> load_simulation_dataset(const std::string& dir, Schema* schema_out) {
  const fs::path gold_path = fs::path(dir) / "gold.json";
  if (!fs::exists(gold_path)) throw Error(ErrorCode::IoError, "missing gold dump: " + gold_path.string());
  const TableDump gold = load_dump(gold_path.string());
  if (schema_out) *schema_out = Schema::from_names(gold.schema);

  std::vector<SimulationDoc> docs;
  for (const auto& g : gold.documents) {
    SimulationDoc sd;
    sd.document.doc_id = g.doc_id;
    const fs::path base = fs::path(dir) / "docs" / g.doc_id;
    const fs::path tei = base.string() + ".tei.xml";
    const fs::path txt = base.string() + ".txt";
    if (fs::exists(tei)) {
      sd.document.variants[ParserKind::StructuredTei] = tei_to_variant(detail::read_file(tei.string()));
      sd.document.source_uri = tei.string();
    }
    if (fs::exists(txt)) {
      sd.document.variants[ParserKind::GenericText] = segment_paragraphs(detail::read_file(txt.string()));
      if (sd.document.source_uri.empty()) sd.document.source_uri = txt.string();
    }
    if (sd.document.variants.empty()) {
      throw Error(ErrorCode::IoError, "no document text for " + g.doc_id + " under " + (fs::path(dir) / "docs").string());
    }
    sd.gold = g.records;
    docs.push_back(std::move(sd));
  }
  return docs;
}

}  // namespace curate
