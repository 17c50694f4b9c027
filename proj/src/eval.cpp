#include "curate/eval.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "curate/aligner.hpp"
#include "curate/error.hpp"

namespace curate {

std::string normalize_cell(std::string_view value, bool exact_case) {
  std::string s = text::collapse_whitespace(text::to_nfc(value));
  return exact_case ? s : text::fold_case(s);
}

namespace {

using Normalized = std::vector<std::vector<std::string>>;

Normalized normalize_all(const std::vector<ValueMap>& records, const std::vector<std::string>& columns,
                         const EvalOptions& options) {
  Normalized out;
  out.reserve(records.size());
  for (const auto& r : records) {
    std::vector<std::string> row;
    row.reserve(columns.size());
    for (const auto& c : columns) {
      const auto it = r.find(c);
      row.push_back(it == r.end() ? std::string{} : normalize_cell(it->second, options.exact_case));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> matrix_of(const Normalized& p, const Normalized& g) {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> m(static_cast<Eigen::Index>(p.size()),
                                                             static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      long long hits = 0;
      for (std::size_t c = 0; c < p[i].size(); ++c) {
        if (!p[i][c].empty() && p[i][c] == g[j][c]) ++hits;
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hits;
    }
  }
  return m;
}

std::size_t non_empty(const Normalized& rows) {
  std::size_t n = 0;
  for (const auto& r : rows) {
    for (const auto& v : r) n += v.empty() ? 0 : 1;
  }
  return n;
}

void check_schemas(const TableDump& pred, const TableDump& gold) {
  const std::set<std::string> a(pred.schema.begin(), pred.schema.end());
  const std::set<std::string> b(gold.schema.begin(), gold.schema.end());
  if (a != b) {
    throw Error(ErrorCode::SchemaMismatch, "prediction columns [" + text::join(pred.schema, ", ") +
                                               "] differ from gold columns [" + text::join(gold.schema, ", ") + "]");
  }
}

std::map<std::string, const DumpDocument*> index_docs(const TableDump& dump) {
  std::map<std::string, const DumpDocument*> out;
  for (const auto& d : dump.documents) {
    if (!out.emplace(d.doc_id, &d).second) {
      throw Error(ErrorCode::MalformedDump, "duplicate doc_id in dump: " + d.doc_id);
    }
  }
  return out;
}

void check_doc_ids(const std::map<std::string, const DumpDocument*>& pred,
                   const std::map<std::string, const DumpDocument*>& gold) {
  std::vector<std::string> offenders;
  for (const auto& [id, _] : pred) {
    if (!gold.count(id)) offenders.push_back(id);
  }
  if (!offenders.empty()) {
    throw Error(ErrorCode::DocIdMismatch, "predicted doc ids absent from gold: " + text::join(offenders, ", "));
  }
}

const std::vector<ValueMap>& records_or_empty(const std::map<std::string, const DumpDocument*>& idx,
                                              const std::string& id) {
  static const std::vector<ValueMap> kEmpty;
  const auto it = idx.find(id);
  return it == idx.end() ? kEmpty : it->second->records;
}

}  // namespace

Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> match_matrix(const std::vector<ValueMap>& pred,
                                                                       const std::vector<ValueMap>& gold,
                                                                       const std::vector<std::string>& columns,
                                                                       const EvalOptions& options) {
  return matrix_of(normalize_all(pred, columns, options), normalize_all(gold, columns, options));
}

Assignment<long long> align_for_eval(const std::vector<ValueMap>& pred, const std::vector<ValueMap>& gold,
                                     const std::vector<std::string>& columns, const EvalOptions& options) {
  return hungarian_max(match_matrix(pred, gold, columns, options));
}

Prf prf_from_counts(const CellCounts& c) {
  Prf out;
  const double p = c.predicted ? static_cast<double>(c.correct) / static_cast<double>(c.predicted) : 0.0;
  const double r = c.gold ? static_cast<double>(c.correct) / static_cast<double>(c.gold) : 0.0;
  out.precision = 100.0 * p;
  out.recall = 100.0 * r;
  out.f1 = p + r > 0.0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
  return out;
}

CellCounts count_cells(const std::vector<ValueMap>& pred, const std::vector<ValueMap>& gold,
                       const std::vector<std::string>& columns, const EvalOptions& options) {
  const Normalized p = normalize_all(pred, columns, options);
  const Normalized g = normalize_all(gold, columns, options);
  CellCounts c;
  c.predicted = non_empty(p);
  c.gold = non_empty(g);
  c.correct = static_cast<std::size_t>(hungarian_max(matrix_of(p, g)).total());
  return c;
}

Prf record_prf(const TableDump& pred, const TableDump& gold, const EvalOptions& options) {
  return evaluate_dataset(pred, gold, options).micro;
}

std::vector<ChrfOrderStats> chrf_statistics(std::string_view hyp, std::string_view ref, int max_n) {
  auto strip = [](std::string_view s) {
    std::u32string out;
    for (char32_t c : text::to_u32(s)) {
      if (!text::is_space(c)) out.push_back(c);
    }
    return out;
  };
  const std::u32string h = strip(hyp);
  const std::u32string r = strip(ref);
  std::vector<ChrfOrderStats> stats(static_cast<std::size_t>(std::max(max_n, 0)));
  for (int n = 1; n <= max_n; ++n) {
    const auto len = static_cast<std::size_t>(n);
    std::unordered_map<std::u32string, std::size_t> hc;
    std::unordered_map<std::u32string, std::size_t> rc;
    for (std::size_t i = 0; i + len <= h.size(); ++i) ++hc[h.substr(i, len)];
    for (std::size_t i = 0; i + len <= r.size(); ++i) ++rc[r.substr(i, len)];
    ChrfOrderStats& s = stats[len - 1];
    s.hyp = h.size() >= len ? h.size() - len + 1 : 0;
    s.ref = r.size() >= len ? r.size() - len + 1 : 0;
    for (const auto& [gram, count] : hc) {
      const auto it = rc.find(gram);
      if (it != rc.end()) s.match += std::min(count, it->second);
    }
  }
  return stats;
}

double chrf_from_statistics(const std::vector<ChrfOrderStats>& stats, double beta) {
  double avg_p = 0.0;
  double avg_r = 0.0;
  int effective = 0;
  for (const auto& s : stats) {
    if (s.hyp == 0 || s.ref == 0) continue;
    avg_p += static_cast<double>(s.match) / static_cast<double>(s.hyp);
    avg_r += static_cast<double>(s.match) / static_cast<double>(s.ref);
    ++effective;
  }
  if (effective == 0) return 0.0;
  avg_p /= effective;
  avg_r /= effective;
  if (avg_p + avg_r == 0.0) return 0.0;
  const double b2 = beta * beta;
  return 100.0 * (1.0 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r);
}

double chrf(std::string_view hyp, std::string_view ref, int max_n, double beta) {
  return chrf_from_statistics(chrf_statistics(hyp, ref, max_n), beta);
}

EvalReport evaluate_dataset(const TableDump& pred, const TableDump& gold, const EvalOptions& options) {
  check_schemas(pred, gold);
  const auto pred_idx = index_docs(pred);
  const auto gold_idx = index_docs(gold);
  check_doc_ids(pred_idx, gold_idx);

  const std::vector<std::string>& columns = gold.schema;
  const Schema schema = Schema::from_names(columns);
  EvalReport report;
  double chrf_sum = 0.0;
  std::size_t chrf_docs = 0;

  for (const auto& gdoc : gold.documents) {
    const auto& p = records_or_empty(pred_idx, gdoc.doc_id);
    const auto& g = gdoc.records;
    DocReport d;
    d.doc_id = gdoc.doc_id;
    d.predicted_records = p.size();
    d.gold_records = g.size();

    const Normalized pn = normalize_all(p, columns, options);
    const Normalized gn = normalize_all(g, columns, options);
    const auto assignment = hungarian_max(matrix_of(pn, gn));
    d.cells.predicted = non_empty(pn);
    d.cells.gold = non_empty(gn);
    d.cells.correct = static_cast<std::size_t>(assignment.total());
    d.prf = prf_from_counts(d.cells);

    const std::size_t slots = std::max(p.size(), g.size());
    if (slots > 0) {
      double sum = 0.0;
      for (const auto& pair : assignment.pairs) {
        sum += chrf(serialize_record(p[static_cast<std::size_t>(pair.row)], schema),
                    serialize_record(g[static_cast<std::size_t>(pair.col)], schema));
      }
      d.chrf = sum / static_cast<double>(slots);
      d.chrf_defined = true;
      chrf_sum += d.chrf;
      ++chrf_docs;
    }

    report.predicted_records += d.predicted_records;
    report.gold_records += d.gold_records;
    report.cells += d.cells;
    report.documents.push_back(std::move(d));
  }
  report.docs = report.documents.size();
  report.micro = prf_from_counts(report.cells);
  report.mean_chrf = chrf_docs ? chrf_sum / static_cast<double>(chrf_docs) : 0.0;
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json docs = nlohmann::ordered_json::array();
  for (const auto& d : report.documents) {
    nlohmann::ordered_json j;
    j["doc_id"] = d.doc_id;
    j["precision"] = d.prf.precision;
    j["recall"] = d.prf.recall;
    j["f1"] = d.prf.f1;
    j["chrf"] = d.chrf_defined ? nlohmann::ordered_json(d.chrf) : nlohmann::ordered_json(nullptr);
    j["predicted_records"] = d.predicted_records;
    j["gold_records"] = d.gold_records;
    j["correct_cells"] = d.cells.correct;
    j["predicted_cells"] = d.cells.predicted;
    j["gold_cells"] = d.cells.gold;
    docs.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["precision"] = report.micro.precision;
  out["recall"] = report.micro.recall;
  out["f1"] = report.micro.f1;
  out["chrf"] = report.mean_chrf;
  out["docs"] = report.docs;
  out["predicted_records"] = report.predicted_records;
  out["gold_records"] = report.gold_records;
  out["correct_cells"] = report.cells.correct;
  out["predicted_cells"] = report.cells.predicted;
  out["gold_cells"] = report.cells.gold;
  out["documents"] = std::move(docs);
  return out;
}

std::string report_to_text(const EvalReport& report, std::string_view dataset_name) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "dataset\tP\tR\tF1\tChrF\n";
  for (const auto& d : report.documents) {
    os << d.doc_id << '\t' << fmt(d.prf.precision) << '\t' << fmt(d.prf.recall) << '\t' << fmt(d.prf.f1) << '\t'
       << (d.chrf_defined ? fmt(d.chrf) : std::string("-")) << '\n';
  }
  os << dataset_name << '\t' << fmt(report.micro.precision) << '\t' << fmt(report.micro.recall) << '\t'
     << fmt(report.micro.f1) << '\t' << fmt(report.mean_chrf) << '\n';
  return os.str();
}

// ---------------------------------------------------------------- dumps

TableDump parse_dump(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDump, std::string("dump is not JSON: ") + e.what());
  }
  auto bad = [](const std::string& what) { return Error(ErrorCode::MalformedDump, what); };
  if (!j.is_object()) throw bad("dump must be a JSON object");
  if (!j.contains("schema") || !j["schema"].is_array()) throw bad("dump needs a schema array");
  if (!j.contains("documents") || !j["documents"].is_array()) throw bad("dump needs a documents array");

  TableDump dump;
  for (const auto& c : j["schema"]) {
    if (c.is_string()) {
      dump.schema.push_back(c.get<std::string>());
    } else if (c.is_object() && c.contains("name") && c["name"].is_string()) {
      dump.schema.push_back(c["name"].get<std::string>());
    } else {
      throw bad("schema entries must be column names");
    }
  }
  if (j.contains("retired")) {
    if (!j["retired"].is_array()) throw bad("retired must be an array");
    for (const auto& c : j["retired"]) {
      if (!c.is_string()) throw bad("retired entries must be column names");
      dump.retired.push_back(c.get<std::string>());
    }
  }
  std::set<std::string> seen;
  for (const auto& d : j["documents"]) {
    if (!d.is_object() || !d.contains("doc_id") || !d["doc_id"].is_string()) throw bad("document needs a doc_id");
    DumpDocument doc;
    doc.doc_id = d["doc_id"].get<std::string>();
    if (!seen.insert(doc.doc_id).second) throw bad("duplicate doc_id " + doc.doc_id);
    if (d.contains("records")) {
      if (!d["records"].is_array()) throw bad("records of " + doc.doc_id + " must be an array");
      for (const auto& r : d["records"]) {
        if (!r.is_object()) throw bad("record of " + doc.doc_id + " must be an object");
        ValueMap values;
        for (const auto& [k, v] : r.items()) {
          if (v.is_string()) {
            values[k] = v.get<std::string>();
          } else if (v.is_null()) {
            values[k] = "";
          } else if (v.is_primitive()) {
            values[k] = v.dump();
          } else {
            throw bad("cell " + k + " of " + doc.doc_id + " must be a scalar");
          }
        }
        doc.records.push_back(std::move(values));
      }
    }
    dump.documents.push_back(std::move(doc));
  }
  return dump;
}

TableDump load_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read dump: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dump(ss.str());
}

std::string serialize_dump(const TableDump& dump) {
  std::vector<std::string> keys = dump.schema;
  keys.insert(keys.end(), dump.retired.begin(), dump.retired.end());
  nlohmann::ordered_json j;
  j["schema"] = dump.schema;
  if (!dump.retired.empty()) j["retired"] = dump.retired;
  nlohmann::ordered_json docs = nlohmann::ordered_json::array();
  for (const auto& d : dump.documents) {
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : d.records) {
      nlohmann::ordered_json rec = nlohmann::ordered_json::object();
      for (const auto& k : keys) {
        const auto it = r.find(k);
        rec[k] = it == r.end() ? std::string{} : it->second;
      }
      records.push_back(std::move(rec));
    }
    nlohmann::ordered_json doc;
    doc["doc_id"] = d.doc_id;
    doc["records"] = std::move(records);
    docs.push_back(std::move(doc));
  }
  j["documents"] = std::move(docs);
  return j.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

}  // namespace curate
