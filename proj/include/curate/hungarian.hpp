#pragma once

// Maximum-weight one-to-one assignment over a dense score matrix.
//
// The solver runs the O(n^3) shortest-augmenting-path Hungarian method on
// negated scores, padded to a square with zeros. Among all optimal
// assignments it returns the lexicographically smallest one (rows in order,
// each taking its smallest feasible column, padding columns last): by
// complementary slackness every optimum uses only edges that are tight
// under the final dual, so a greedy pass over the tight-edge graph with an
// augmenting-path feasibility check picks that optimum.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <vector>

namespace curate {

template <typename Scalar>
struct AssignedPair {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  Scalar score{};

  friend bool operator==(const AssignedPair&, const AssignedPair&) = default;
};

template <typename Scalar>
struct Assignment {
  std::vector<AssignedPair<Scalar>> pairs;  // ascending row
  std::vector<Eigen::Index> unmatched_rows;
  std::vector<Eigen::Index> unmatched_cols;

  /// Sum of pair scores accumulated in row order.
  Scalar total() const {
    Scalar t{};
    for (const auto& p : pairs) t += p.score;
    return t;
  }
};

namespace detail {

template <typename Scalar>
using HungarianAcc = std::conditional_t<std::is_integral_v<Scalar>, long long, double>;

/// Bipartite matcher restricted to tight edges; used to pick the
/// lexicographically smallest optimum.
class TightMatcher {
 public:
  TightMatcher(std::vector<std::vector<char>> tight, std::vector<int> row_to_col)
      : tight_(std::move(tight)), n_(static_cast<int>(tight_.size())), row_to_col_(std::move(row_to_col)),
        col_to_row_(n_, -1), fixed_(n_, 0) {
    for (int r = 0; r < n_; ++r) col_to_row_[row_to_col_[r]] = r;
  }

  /// Rewrites the matching so that row `i` takes the smallest feasible
  /// column, then freezes row `i`.
  void fix_smallest(int i) {
    for (int j = 0; j < n_; ++j) {
      if (!tight_[i][j]) continue;
      if (row_to_col_[i] == j) break;
      const int owner = col_to_row_[j];
      if (fixed_[owner]) continue;
      if (try_take(i, j)) break;
    }
    fixed_[i] = 1;
  }

  const std::vector<int>& row_to_col() const { return row_to_col_; }

 private:
  // Give column j to row i; its owner must find another column through an
  // alternating path that ends in the column row i releases.
  bool try_take(int i, int j) {
    const int owner = col_to_row_[j];
    const int released = row_to_col_[i];
    std::vector<int> saved_r2c = row_to_col_;
    std::vector<int> saved_c2r = col_to_row_;
    row_to_col_[i] = j;
    col_to_row_[j] = i;
    col_to_row_[released] = -1;
    row_to_col_[owner] = -1;
    std::vector<char> visited(n_, 0);
    visited[j] = 1;
    if (augment(owner, visited)) return true;
    row_to_col_ = std::move(saved_r2c);
    col_to_row_ = std::move(saved_c2r);
    return false;
  }

  bool augment(int r, std::vector<char>& visited) {
    for (int c = 0; c < n_; ++c) {
      if (!tight_[r][c] || visited[c]) continue;
      visited[c] = 1;
      const int other = col_to_row_[c];
      if (other != -1 && fixed_[other]) continue;
      if (other == -1 || augment(other, visited)) {
        row_to_col_[r] = c;
        col_to_row_[c] = r;
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<char>> tight_;
  int n_;
  std::vector<int> row_to_col_;
  std::vector<int> col_to_row_;
  std::vector<char> fixed_;
};

}  // namespace detail

/// Maximum-total assignment; |pairs| = min(rows, cols). Entries must be
/// finite. An empty matrix yields an empty assignment.
template <typename Derived>
Assignment<typename Derived::Scalar> hungarian_max(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  using Acc = detail::HungarianAcc<Scalar>;
  const Eigen::Index rows = scores.rows();
  const Eigen::Index cols = scores.cols();
  Assignment<Scalar> result;
  if (rows == 0 || cols == 0) {
    for (Eigen::Index r = 0; r < rows; ++r) result.unmatched_rows.push_back(r);
    for (Eigen::Index c = 0; c < cols; ++c) result.unmatched_cols.push_back(c);
    return result;
  }

  const int n = static_cast<int>(std::max(rows, cols));
  auto cost = [&](int i, int j) -> Acc {
    if (i < rows && j < cols) return -static_cast<Acc>(scores(i, j));
    return Acc{0};
  };

  // Shortest augmenting paths with potentials (1-based, column 0 virtual).
  const Acc inf = std::numeric_limits<Acc>::max() / 4;
  std::vector<Acc> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Acc> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      Acc delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Acc cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, 0);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;

  // Tight edges under the final dual.
  Acc magnitude = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) magnitude = std::max<Acc>(magnitude, cost(i, j) < 0 ? -cost(i, j) : cost(i, j));
  }
  Acc tol = 0;
  if constexpr (!std::is_integral_v<Scalar>) tol = 1e-9 * (1.0 + magnitude) * n;
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Acc reduced = cost(i, j) - u[i + 1] - v[j + 1];
      tight[i][j] = reduced <= tol ? 1 : 0;
    }
    tight[i][row_to_col[i]] = 1;
  }

  detail::TightMatcher matcher(std::move(tight), std::move(row_to_col));
  for (int i = 0; i < n; ++i) matcher.fix_smallest(i);
  const auto& final_r2c = matcher.row_to_col();

  std::vector<char> col_used(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int c = final_r2c[static_cast<std::size_t>(r)];
    if (c < cols) {
      result.pairs.push_back({r, c, scores(r, c)});
      col_used[static_cast<std::size_t>(c)] = 1;
    } else {
      result.unmatched_rows.push_back(r);
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (!col_used[static_cast<std::size_t>(c)]) result.unmatched_cols.push_back(c);
  }
  return result;
}

}  // namespace curate
