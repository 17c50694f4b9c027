#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "curate/bm25.hpp"
#include "curate/dump.hpp"
#include "curate/generator.hpp"
#include "curate/record.hpp"

namespace curate {

struct PoolEntry {
  std::string doc_id;
  std::string text;
  /// Human-verified records of this document.
  std::vector<ValueMap> records;
};

/// Human-verified records keyed by document. A value type: a batch holds a
/// copy taken at its start, so later corrections never reach it.
class CorrectionPool {
 public:
  CorrectionPool() = default;

  /// Adds a verified record, creating the document's entry on first use.
  void add(const std::string& doc_id, const std::string& text, const ValueMap& record);
  /// Adds a whole document entry (records may be empty).
  void add_entry(PoolEntry entry);
  void set_version(std::uint64_t v) { version_ = v; }

  const std::vector<PoolEntry>& entries() const { return entries_; }
  const PoolEntry* find(const std::string& doc_id) const;
  std::uint64_t version() const { return version_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<PoolEntry> entries_;  // ascending doc_id
  std::uint64_t version_ = 0;
};

inline constexpr std::size_t kDefaultShots = 1;

/// Top-`m` pool entries by BM25 against the target text, ties by ascending
/// doc_id. Each becomes one example carrying all verified records of its
/// document. Excerpts are cut to `max_excerpt_chars` code points.
std::vector<ICLExample> select_icl_examples(std::string_view target_text, const CorrectionPool& pool,
                                            std::size_t m = kDefaultShots, Bm25Params params = {},
                                            std::size_t max_excerpt_chars = std::numeric_limits<std::size_t>::max());

/// Same ranking, returning the pool doc ids with scores.
std::vector<ScoredDoc> rank_pool(std::string_view target_text, const CorrectionPool& pool, Bm25Params params = {});

struct SimulationDoc {
  ParsedDocument document;
  std::vector<ValueMap> gold;
};

struct SimulationConfig {
  std::vector<SimulationDoc> dataset;
  std::size_t pool_size = 0;  // k
  std::size_t shots = 1;      // m
  Schema schema;
  LlmProvider* llm = nullptr;
  std::uint64_t seed = 0;
  GenerationOptions generation;
  /// Called per test document with the ids in its sampled pool.
  std::function<void(const std::string& test_doc, const std::vector<std::string>& pool_docs)> on_pool;
};

struct SimulationResult {
  TableDump table;
  /// doc_id -> generator error; the loop continues past failures.
  std::map<std::string, std::string> errors;
};

/// Leave-one-out replay of the curation loop: every document is predicted
/// with examples drawn from a random sample of the others' gold records.
SimulationResult simulate_curation(const SimulationConfig& cfg);

/// Deterministic sample of `k` distinct indices from [0, n) in ascending
/// order (partial Fisher-Yates over a 64-bit Mersenne Twister).
std::vector<std::size_t> random_sample(std::size_t n, std::size_t k, std::mt19937_64& rng);

/// Reads `<dir>/gold.json` and one document per gold doc_id from
/// `<dir>/docs/<doc_id>.tei.xml` and/or `<dir>/docs/<doc_id>.txt`.
/// Throws IoError when the gold dump is missing.
std::vector<SimulationDoc> load_simulation_dataset(const std::string& dir, Schema* schema_out = nullptr);

}  // namespace curate
