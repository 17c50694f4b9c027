#pragma once

// Exhaustive window search with a full Levenshtein table per window.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "curate/text.hpp"

namespace curate::oracle {

inline std::size_t full_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

inline int window_ratio(std::size_t lev, std::size_t n, std::size_t w) {
  if (lev == 0) return 100;
  const double r = std::round(100.0 * (1.0 - static_cast<double>(lev) / static_cast<double>(std::max(n, w))));
  return std::clamp(static_cast<int>(r), 0, 99);
}

inline int partial_ratio(const std::string& needle, const std::string& haystack) {
  const std::u32string n = text::fold_for_matching(needle).chars;
  const std::u32string h = text::fold_for_matching(haystack).chars;
  if (n.empty() || h.empty()) return 0;
  const std::size_t slack = static_cast<std::size_t>(std::ceil(static_cast<double>(n.size()) / 4.0));
  const std::size_t lo = n.size() > slack ? n.size() - slack : 1;
  const std::size_t hi = n.size() + slack;
  if (h.size() < lo) return window_ratio(full_levenshtein(n, h), n.size(), h.size());
  int best = 0;
  for (std::size_t s = 0; s < h.size(); ++s) {
    for (std::size_t len = lo; len <= hi && s + len <= h.size(); ++len) {
      best = std::max(best, window_ratio(full_levenshtein(n, h.substr(s, len)), n.size(), len));
    }
  }
  return best;
}

}  // namespace curate::oracle
