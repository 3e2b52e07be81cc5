// Rectangular linear sum assignment (shortest augmenting path form of the
// Hungarian method). Deterministic: equal-cost alternatives resolve toward
// lower indices.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace densevoc {

/// Minimum-cost assignment. Returns (row, col) pairs, one per row of the
/// smaller dimension, sorted by row.
inline std::vector<std::pair<int, int>> solve_min_cost(const Eigen::MatrixXd& cost) {
  const bool transposed = cost.rows() > cost.cols();
  const Eigen::MatrixXd c = transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
  const int n = static_cast<int>(c.rows());
  const int m = static_cast<int>(c.cols());
  std::vector<std::pair<int, int>> result;
  if (n == 0 || m == 0) return result;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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

  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) {
    if (col_of_row[i] < 0) continue;
    if (transposed)
      result.emplace_back(col_of_row[i], i);
    else
      result.emplace_back(i, col_of_row[i]);
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// Maximum-weight matching restricted to pairs with `eligible(i, j)` true.
/// Ineligible pairs cost the same as leaving a row unmatched, so the result is
/// a maximum-weight (not maximum-cardinality) matching. Ineligible pairs are
/// never returned.
template <typename Eligible>
std::vector<std::pair<int, int>> solve_max_weight(const Eigen::MatrixXd& weight, Eligible&& eligible) {
  const Eigen::Index rows = weight.rows(), cols = weight.cols();
  if (rows == 0 || cols == 0) return {};
  Eigen::MatrixXd cost(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      cost(i, j) = eligible(static_cast<int>(i), static_cast<int>(j)) ? -weight(i, j) : 0.0;
  std::vector<std::pair<int, int>> out;
  for (const auto& [i, j] : solve_min_cost(cost))
    if (eligible(i, j)) out.emplace_back(i, j);
  return out;
}

inline std::vector<std::pair<int, int>> solve_max_weight(const Eigen::MatrixXd& weight) {
  return solve_max_weight(weight, [](int, int) { return true; });
}

}  // namespace densevoc
