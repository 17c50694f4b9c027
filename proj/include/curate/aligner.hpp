#pragma once

// Merges the per-pipeline record sets of one document: records are embedded,
// compared by cosine similarity and paired by maximum-weight assignment.

#include <Eigen/Core>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "curate/hungarian.hpp"
#include "curate/record.hpp"

namespace curate {

class Config;

/// Sentence-embedding backend. Identical input must give an identical,
/// all-finite vector of length `dim()`.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::Index dim() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) = 0;
  /// One row per input; the default embeds one at a time.
  virtual Eigen::MatrixXd embed_batch(const std::vector<std::string>& texts);
  virtual bool concurrent_safe() const { return true; }
};

/// Offline fallback: term-frequency vectors over `text::tokenize` tokens,
/// hashed into `dim` buckets with a multiplicative string hash.
class HashedTfEmbedding final : public EmbeddingProvider {
 public:
  explicit HashedTfEmbedding(Eigen::Index dim = 512) : dim_(dim) {}
  Eigen::Index dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view text) override;

  /// Bucket of one token.
  static std::size_t bucket(std::string_view token, Eigen::Index dim);

 private:
  Eigen::Index dim_;
};

/// `POST url` with a JSON array of strings; the reply is an array of float
/// arrays of length `dim`.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, Eigen::Index dim) : url_(std::move(url)), dim_(dim) {}
  Eigen::Index dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view text) override;
  Eigen::MatrixXd embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::string url_;
  Eigen::Index dim_;
};

/// `embedding_profile = lexical | http`.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const Config& config);

/// `"col1: v1; col2: v2"` in schema order, empty cells omitted.
std::string serialize_record(const ValueMap& values, const Schema& schema);
std::string serialize_record(const Record& record, const Schema& schema);

/// dot(u, v) / (|u| |v|); 0 when either vector is zero.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

/// Row i of `a` against row j of `b`.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

inline constexpr double kDefaultSuggestThreshold = 0.5;

/// Output order: records of `set_a` in order (merged when paired at or above
/// the threshold), then the remaining records of `set_b` in order. Merged
/// records keep set A's values as primary and set B's as the alternative.
std::vector<MergedRecord> align_record_sets(const std::vector<Record>& set_a, const std::vector<Record>& set_b,
                                            const Schema& schema, EmbeddingProvider& provider,
                                            double suggest_threshold = kDefaultSuggestThreshold);

}  // namespace curate
