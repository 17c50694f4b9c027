#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace curate {

/// Okapi free parameters.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

/// Immutable inverted index; safe to share across threads once built.
class Bm25Index {
 public:
  /// Tokenizes each text with `text::tokenize`. Throws EmptyCorpus.
  static Bm25Index build(const std::vector<std::pair<std::string, std::string>>& corpus,
                         Bm25Params params = {});
  static Bm25Index build_tokenized(const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus,
                                   Bm25Params params = {});

  /// ln((N - df + 0.5) / (df + 0.5) + 1)
  double idf(std::string_view term) const;

  /// Sum over query tokens (repeats included) of
  /// idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl)).
  /// Throws UnknownDoc.
  double score(std::span<const std::string> query_tokens, std::string_view doc_id) const;

  /// All documents by non-increasing score; ties by ascending doc_id.
  std::vector<ScoredDoc> rank(std::span<const std::string> query_tokens) const;

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t doc_freq(std::string_view term) const;
  std::size_t term_freq(std::string_view term, std::string_view doc_id) const;
  std::size_t doc_length(std::string_view doc_id) const;
  double avg_doc_length() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }

 private:
  struct Posting {
    std::size_t doc = 0;
    std::size_t tf = 0;
  };

  std::size_t doc_index(std::string_view doc_id) const;
  double score_index(std::span<const std::string> query_tokens, std::size_t doc) const;

  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_lengths_;
  double avgdl_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;  // sorted by doc
  std::unordered_map<std::string, std::size_t> doc_lookup_;
};

}  // namespace curate
