#include "curate/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate {

Bm25Index Bm25Index::build(const std::vector<std::pair<std::string, std::string>>& corpus, Bm25Params params) {
  std::vector<std::pair<std::string, std::vector<std::string>>> tokenized;
  tokenized.reserve(corpus.size());
  for (const auto& [id, body] : corpus) tokenized.emplace_back(id, text::tokenize(body));
  return build_tokenized(tokenized, params);
}

Bm25Index Bm25Index::build_tokenized(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus, Bm25Params params) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty corpus");
  Bm25Index index;
  index.params_ = params;
  double total = 0.0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& [id, tokens] = corpus[d];
    if (!index.doc_lookup_.emplace(id, d).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate document id in corpus: " + id);
    }
    index.doc_ids_.push_back(id);
    index.doc_lengths_.push_back(tokens.size());
    total += static_cast<double>(tokens.size());
    std::map<std::string_view, std::size_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) index.postings_[std::string(term)].push_back({d, tf});
  }
  index.avgdl_ = total / static_cast<double>(corpus.size());
  return index;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(doc_count());
  const double df = static_cast<double>(doc_freq(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  const auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

std::size_t Bm25Index::doc_index(std::string_view doc_id) const {
  const auto it = doc_lookup_.find(std::string(doc_id));
  if (it == doc_lookup_.end()) throw Error(ErrorCode::UnknownDoc, "document not in index: " + std::string(doc_id));
  return it->second;
}

std::size_t Bm25Index::term_freq(std::string_view term, std::string_view doc_id) const {
  const std::size_t d = doc_index(doc_id);
  const auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return 0;
  const auto p = std::lower_bound(it->second.begin(), it->second.end(), d,
                                  [](const Posting& x, std::size_t v) { return x.doc < v; });
  return p != it->second.end() && p->doc == d ? p->tf : 0;
}

std::size_t Bm25Index::doc_length(std::string_view doc_id) const { return doc_lengths_[doc_index(doc_id)]; }

double Bm25Index::score_index(std::span<const std::string> query_tokens, std::size_t d) const {
  const double k1 = params_.k1;
  const double b = params_.b;
  const double norm = avgdl_ > 0.0 ? static_cast<double>(doc_lengths_[d]) / avgdl_ : 0.0;
  double score = 0.0;
  for (const auto& term : query_tokens) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto p = std::lower_bound(it->second.begin(), it->second.end(), d,
                                    [](const Posting& x, std::size_t v) { return x.doc < v; });
    if (p == it->second.end() || p->doc != d) continue;
    const double tf = static_cast<double>(p->tf);
    score += idf(term) * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
  }
  return score;
}

double Bm25Index::score(std::span<const std::string> query_tokens, std::string_view doc_id) const {
  return score_index(query_tokens, doc_index(doc_id));
}

std::vector<ScoredDoc> Bm25Index::rank(std::span<const std::string> query_tokens) const {
  std::vector<ScoredDoc> out;
  out.reserve(doc_ids_.size());
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) out.push_back({doc_ids_[d], score_index(query_tokens, d)});
  std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  return out;
}

}  // namespace curate
