#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "curate/dump.hpp"
#include "curate/hungarian.hpp"
#include "curate/record.hpp"

namespace curate {

struct EvalOptions {
  /// Skip case folding in normalize_cell.
  bool exact_case = false;
};

/// NFC, trim, whitespace collapse, then case fold unless `exact_case`.
std::string normalize_cell(std::string_view value, bool exact_case = false);

/// Integer matrix of exactly matching non-empty normalized cells, rows =
/// predictions, cols = gold.
Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> match_matrix(const std::vector<ValueMap>& pred,
                                                                       const std::vector<ValueMap>& gold,
                                                                       const std::vector<std::string>& columns,
                                                                       const EvalOptions& options = {});

Assignment<long long> align_for_eval(const std::vector<ValueMap>& pred, const std::vector<ValueMap>& gold,
                                     const std::vector<std::string>& columns, const EvalOptions& options = {});

struct CellCounts {
  std::size_t correct = 0;
  std::size_t predicted = 0;  // non-empty predicted cells
  std::size_t gold = 0;       // non-empty gold cells

  CellCounts& operator+=(const CellCounts& o) {
    correct += o.correct;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

/// 0-100 scale; zero denominators give 0.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf prf_from_counts(const CellCounts& counts);

CellCounts count_cells(const std::vector<ValueMap>& pred, const std::vector<ValueMap>& gold,
                       const std::vector<std::string>& columns, const EvalOptions& options = {});

/// Micro-averaged over documents. Throws SchemaMismatch when the column
/// sets differ and DocIdMismatch for predicted doc ids absent from gold.
Prf record_prf(const TableDump& pred, const TableDump& gold, const EvalOptions& options = {});

/// Per-order character n-gram counts: hypothesis total, reference total,
/// clipped matches.
struct ChrfOrderStats {
  std::size_t hyp = 0;
  std::size_t ref = 0;
  std::size_t match = 0;
};

inline constexpr int kChrfOrder = 6;
inline constexpr double kChrfBeta = 2.0;

/// Whitespace is removed before n-gram extraction.
std::vector<ChrfOrderStats> chrf_statistics(std::string_view hyp, std::string_view ref, int max_n = kChrfOrder);
double chrf_from_statistics(const std::vector<ChrfOrderStats>& stats, double beta = kChrfBeta);
/// Precision and recall are averaged over orders present on both sides,
/// then combined as F-beta; 0-100 scale.
double chrf(std::string_view hyp, std::string_view ref, int max_n = kChrfOrder, double beta = kChrfBeta);

struct DocReport {
  std::string doc_id;
  Prf prf;
  /// Mean over aligned pairs; unmatched records on either side score 0.
  double chrf = 0.0;
  /// False when the document has no records on either side.
  bool chrf_defined = false;
  std::size_t predicted_records = 0;
  std::size_t gold_records = 0;
  CellCounts cells;
};

struct EvalReport {
  std::vector<DocReport> documents;  // gold order
  Prf micro;
  double mean_chrf = 0.0;
  std::size_t docs = 0;
  std::size_t predicted_records = 0;
  std::size_t gold_records = 0;
  CellCounts cells;
};

EvalReport evaluate_dataset(const TableDump& pred, const TableDump& gold, const EvalOptions& options = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);
/// One header line then one tab-separated row per document and a total row.
std::string report_to_text(const EvalReport& report, std::string_view dataset_name = "dataset");

}  // namespace curate
