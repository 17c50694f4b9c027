#include "curate/aligner.hpp"

#include <algorithm>

namespace curate {

std::string serialize_record(const ValueMap& values, const Schema& schema) {
  std::vector<std::string> parts;
  for (const auto& col : schema.columns()) {
    const auto it = values.find(col.name);
    if (it == values.end() || it->second.empty()) continue;
    parts.push_back(col.name + ": " + it->second);
  }
  return text::join(parts, "; ");
}

std::string serialize_record(const Record& record, const Schema& schema) {
  return serialize_record(record.values(), schema);
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd s(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) s(i, j) = cosine(a.row(i), b.row(j));
  }
  return s;
}

std::vector<MergedRecord> align_record_sets(const std::vector<Record>& set_a, const std::vector<Record>& set_b,
                                            const Schema& schema, EmbeddingProvider& provider,
                                            double suggest_threshold) {
  std::vector<MergedRecord> out;
  if (set_a.empty() || set_b.empty()) {
    out.insert(out.end(), set_a.begin(), set_a.end());
    out.insert(out.end(), set_b.begin(), set_b.end());
    return out;
  }

  auto serialize_all = [&](const std::vector<Record>& set) {
    std::vector<std::string> texts;
    texts.reserve(set.size());
    for (const auto& r : set) texts.push_back(serialize_record(r, schema));
    return texts;
  };
  const Eigen::MatrixXd sim =
      similarity_matrix(provider.embed_batch(serialize_all(set_a)), provider.embed_batch(serialize_all(set_b)));
  const auto assignment = hungarian_max(sim);

  std::vector<Eigen::Index> partner(set_a.size(), -1);
  std::vector<char> b_consumed(set_b.size(), 0);
  for (const auto& p : assignment.pairs) {
    if (p.score >= suggest_threshold) {
      partner[static_cast<std::size_t>(p.row)] = p.col;
      b_consumed[static_cast<std::size_t>(p.col)] = 1;
    }
  }

  for (std::size_t i = 0; i < set_a.size(); ++i) {
    if (partner[i] < 0) {
      out.push_back(set_a[i]);
      continue;
    }
    const Record& a = set_a[i];
    const Record& b = set_b[static_cast<std::size_t>(partner[i])];
    // The structured pipeline's values stay primary.
    const bool b_primary = b.origin == Origin::StructuredTei && a.origin != Origin::StructuredTei;
    const Record& primary = b_primary ? b : a;
    const Record& secondary = b_primary ? a : b;
    MergedRecord merged = primary;
    merged.origin = Origin::Merged;
    merged.alternative = Alternative{secondary.values(), secondary.origin, sim(static_cast<Eigen::Index>(i), partner[i])};
    out.push_back(std::move(merged));
  }
  for (std::size_t j = 0; j < set_b.size(); ++j) {
    if (!b_consumed[j]) out.push_back(set_b[j]);
  }
  return out;
}

}  // namespace curate
