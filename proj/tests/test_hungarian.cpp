#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "densevoc/hungarian.hpp"
#include "densevoc/random.hpp"

using namespace densevoc;

namespace {

// Best total cost over all assignments of min(rows, cols) pairs.
double brute_min_cost(const Eigen::MatrixXd& c) {
  const bool t = c.rows() > c.cols();
  const Eigen::MatrixXd m = t ? Eigen::MatrixXd(c.transpose()) : c;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

}  // namespace

TEST(Hungarian, MatchesPermutationSearch) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = static_cast<Eigen::Index>(1 + rng.index(5)), c = static_cast<Eigen::Index>(1 + rng.index(5));
    Eigen::MatrixXd cost(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) cost(i, j) = rng.uniform(-3, 3);
    const auto pairs = solve_min_cost(cost);
    ASSERT_EQ(pairs.size(), static_cast<std::size_t>(std::min(r, c)));
    double s = 0;
    std::vector<char> row_used(static_cast<std::size_t>(r)), col_used(static_cast<std::size_t>(c));
    for (auto [i, j] : pairs) {
      EXPECT_FALSE(row_used[static_cast<std::size_t>(i)]++);
      EXPECT_FALSE(col_used[static_cast<std::size_t>(j)]++);
      s += cost(i, j);
    }
    EXPECT_NEAR(s, brute_min_cost(cost), 1e-9);
  }
}

TEST(Hungarian, MaxWeightSkipsIneligiblePairs) {
  Eigen::MatrixXd w(2, 2);
  w << 0.9, 0.2, 0.6, 0.1;
  const auto pairs = solve_max_weight(w, [&](int i, int j) { return w(i, j) >= 0.5; });
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], std::make_pair(0, 0));
}

TEST(Hungarian, EmptyInput) {
  EXPECT_TRUE(solve_min_cost(Eigen::MatrixXd(0, 3)).empty());
  EXPECT_TRUE(solve_min_cost(Eigen::MatrixXd(2, 0)).empty());
}
