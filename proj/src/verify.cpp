#include "curate/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "curate/error.hpp"
#include "curate/generator.hpp"

namespace curate {

Band band_for(int ratio, BandThresholds t) {
  if (ratio >= t.supported) return Band::Supported;
  if (ratio >= t.partial) return Band::Partial;
  return Band::Unsupported;
}

FuzzyScorer fuzzy_scorer_from_string(std::string_view s) {
  if (s == "partial_ratio") return FuzzyScorer::PartialRatio;
  if (s == "ratio") return FuzzyScorer::Ratio;
  throw Error(ErrorCode::InvalidConfig, "unknown fuzzy_scorer: " + std::string(s));
}

namespace {

int window_score(std::size_t distance, std::size_t needle_len, std::size_t window_len) {
  if (distance == 0) return 100;
  const double longest = static_cast<double>(std::max(needle_len, window_len));
  const int r = static_cast<int>(std::lround(100.0 * (1.0 - static_cast<double>(distance) / longest)));
  return std::clamp(r, 0, 99);
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::uint64_t trigram_key(std::u32string_view s, std::size_t i) {
  return (static_cast<std::uint64_t>(s[i]) << 42) ^ (static_cast<std::uint64_t>(s[i + 1]) << 21) ^ s[i + 2];
}

}  // namespace

FuzzyMatch fuzzy_match(std::string_view needle_in, std::string_view haystack_in, const FuzzyOptions& options) {
  const text::FoldedText needle = text::fold_for_matching(needle_in);
  const text::FoldedText hay = text::fold_for_matching(haystack_in);
  const std::size_t n = needle.chars.size();
  const std::size_t h = hay.chars.size();
  FuzzyMatch best;
  if (n == 0 || h == 0) return best;

  auto to_source = [&](std::size_t b, std::size_t len) {
    return text::Span{hay.source_index[b], hay.source_index[b + len - 1] + 1};
  };

  if (options.scorer == FuzzyScorer::Ratio) {
    best.ratio = window_score(levenshtein(needle.chars, hay.chars), n, h);
    if (best.ratio > 0) best.span = to_source(0, h);
    return best;
  }

  const std::size_t slack = (n + 3) / 4;
  const std::size_t lo = n > slack ? n - slack : 1;
  const std::size_t hi = n + slack;
  if (h < lo) {
    best.ratio = window_score(levenshtein(needle.chars, hay.chars), n, h);
    if (best.ratio > 0) best.span = to_source(0, h);
    return best;
  }

  std::vector<std::size_t> starts(h - lo + 1);
  std::iota(starts.begin(), starts.end(), std::size_t{0});
  const std::size_t per_start = hi - lo + 1;
  if (starts.size() * per_start > options.max_comparisons && n >= 3) {
    // Coarse filter: keep the starts whose needle-length window shares the
    // most trigrams with the needle.
    std::unordered_map<std::uint64_t, int> grams;
    for (std::size_t i = 0; i + 2 < n; ++i) ++grams[trigram_key(needle.chars, i)];
    std::vector<int> hit(h, 0);
    for (std::size_t i = 0; i + 2 < h; ++i) hit[i] = grams.count(trigram_key(hay.chars, i)) ? 1 : 0;
    std::vector<int> prefix(h + 1, 0);
    for (std::size_t i = 0; i < h; ++i) prefix[i + 1] = prefix[i] + hit[i];
    auto shared = [&](std::size_t s) {
      const std::size_t e = std::min(h, s + n);
      return prefix[e] - prefix[s];
    };
    const std::size_t keep = std::max<std::size_t>(1, options.max_comparisons / per_start);
    std::stable_sort(starts.begin(), starts.end(), [&](std::size_t a, std::size_t b) { return shared(a) > shared(b); });
    starts.resize(std::min(keep, starts.size()));
    std::sort(starts.begin(), starts.end());
  }

  // One DP per start gives the distance to every window length at once:
  // dist[k] = lev(needle, hay[s, s + k)).
  std::vector<std::size_t> col(n + 1);
  for (std::size_t s : starts) {
    std::iota(col.begin(), col.end(), std::size_t{0});
    const std::size_t max_len = std::min(hi, h - s);
    for (std::size_t k = 1; k <= max_len; ++k) {
      const char32_t c = hay.chars[s + k - 1];
      std::size_t diag = col[0];
      col[0] = k;
      for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t up = col[j];
        col[j] = std::min({col[j] + 1, col[j - 1] + 1, diag + (needle.chars[j - 1] == c ? 0 : 1)});
        diag = up;
      }
      if (k < lo) continue;
      const int score = window_score(col[n], n, k);
      if (score > best.ratio) {
        best.ratio = score;
        best.span = to_source(s, k);
        if (score == 100) return best;
      }
    }
  }
  return best;
}

int fuzzy_ratio(std::string_view needle, std::string_view haystack, const FuzzyOptions& options) {
  return fuzzy_match(needle, haystack, options).ratio;
}

MatchGrade provenance_check(std::string_view cell_value, const ParsedDocument& doc, BandThresholds thresholds,
                            const FuzzyOptions& options) {
  MatchGrade grade;
  if (text::trim(cell_value).empty()) return grade;
  for (ParserKind kind : kParserKinds) {
    if (!doc.has(kind)) continue;
    const FuzzyMatch m = fuzzy_match(cell_value, doc.prompt_text(kind), options);
    if (m.ratio > grade.ratio) {
      grade.ratio = m.ratio;
      grade.best_span = m.span;
      grade.span_variant = kind;
    }
    if (grade.ratio == 100) break;
  }
  grade.band = band_for(grade.ratio, thresholds);
  return grade;
}

std::string highlight_tokens(std::string_view paragraph, const std::vector<std::string>& query_tokens) {
  const std::set<std::string> wanted(query_tokens.begin(), query_tokens.end());
  const std::u32string cps = text::to_u32(paragraph);
  std::u32string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!text::is_alnum(cps[i])) {
      out.push_back(cps[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && text::is_alnum(cps[j])) ++j;
    const std::u32string_view token(cps.data() + i, j - i);
    if (wanted.count(text::fold_case(text::to_utf8(token)))) {
      out += U"**";
      out += token;
      out += U"**";
    } else {
      out += token;
    }
    i = j;
  }
  return text::to_utf8(out);
}

std::string strip_highlight(std::string_view highlighted) {
  std::string out;
  out.reserve(highlighted.size());
  for (std::size_t i = 0; i < highlighted.size(); ++i) {
    if (highlighted[i] == '*' && i + 1 < highlighted.size() && highlighted[i + 1] == '*') {
      ++i;
      continue;
    }
    out += highlighted[i];
  }
  return out;
}

std::vector<ScoredParagraph> supporting_paragraphs(const std::vector<std::string>& query_cell_values,
                                                   const ParsedDocument& doc, std::size_t top_k, Bm25Params params) {
  std::vector<ScoredParagraph> out;
  const auto kind = doc.preferred_kind();
  if (!kind || top_k == 0) return out;
  const auto& paragraphs = doc.variants.at(*kind).paragraphs;
  if (paragraphs.empty()) return out;

  std::vector<std::pair<std::string, std::string>> corpus;
  corpus.reserve(paragraphs.size());
  for (const auto& p : paragraphs) corpus.emplace_back(std::to_string(p.index), p.text);
  const Bm25Index index = Bm25Index::build(corpus, params);
  const auto query = text::tokenize(text::join(query_cell_values, " "));

  for (const auto& p : paragraphs) out.push_back({p, index.score(query, std::to_string(p.index)), {}});
  std::stable_sort(out.begin(), out.end(), [](const ScoredParagraph& a, const ScoredParagraph& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.paragraph.index < b.paragraph.index;
  });
  if (out.size() > top_k) out.resize(top_k);
  for (auto& sp : out) sp.highlighted = highlight_tokens(sp.paragraph.text, query);
  return out;
}

std::string build_explanation_prompt(const Schema& schema, std::string_view attribute, std::string_view value,
                                     std::string_view article_text) {
  if (!schema.contains(attribute)) {
    throw Error(ErrorCode::UnknownAttribute, "attribute not in schema: " + std::string(attribute));
  }
  std::string p = "Please find the relevant paragraph that shows that the ";
  p += attribute;
  p += " is ";
  p += value;
  p += " from given article.\n\n";
  p += std::string(kArticleStart) + "\n";
  p += article_text;
  p += "\n" + std::string(kArticleEnd) + "\n";
  return p;
}

}  // namespace curate
