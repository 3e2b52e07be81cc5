// Trajectory-level features from per-observation features.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "densevoc/assoc.hpp"
#include "densevoc/core.hpp"

namespace densevoc {

/// Row-major M x D features, one row per observation.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// G = (A with rows scaled to unit L1 norm) * F.
inline FeatureMatrix soft_aggregate(const AssocMatrix& a, const FeatureMatrix& f) {
  check_shape(a);
  if (a.values.rows() != f.rows())
    throw InvalidInput("soft_aggregate: association has " + std::to_string(a.values.rows()) +
                       " rows but features have " + std::to_string(f.rows()));
  const Eigen::VectorXd row_sum = a.values.cwiseAbs().rowwise().sum();
  if ((row_sum.array() <= 0.0).any()) throw InvalidInput("soft_aggregate: association row sums to zero");
  const Eigen::MatrixXd weights = row_sum.cwiseInverse().asDiagonal() * a.values;
  return weights * f;
}

/// Evenly spaced indices into a trajectory of `length` observations, both
/// endpoints included. Short trajectories pass through unchanged.
inline std::vector<std::size_t> hard_sample_indices(std::size_t length, std::size_t m) {
  std::vector<std::size_t> out;
  if (length == 0 || m == 0) return out;
  if (length <= m) {
    for (std::size_t i = 0; i < length; ++i) out.push_back(i);
    return out;
  }
  if (m == 1) return {0};
  const double step = static_cast<double>(length - 1) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i)
    out.push_back(static_cast<std::size_t>(std::lround(static_cast<double>(i) * step)));
  return out;
}

/// Per trajectory id, the concatenation of the sampled feature rows taken in
/// frame order. Output length is min(L, m) * D.
inline std::map<int, Eigen::VectorXd> hard_aggregate(const FeatureMatrix& f, const IdentityAssignment& ids,
                                                     std::span<const int> frame_of, std::size_t m = 6) {
  const auto rows = static_cast<std::size_t>(f.rows());
  if (ids.ids.size() != rows || frame_of.size() != rows)
    throw InvalidInput("hard_aggregate: ids, frames and feature rows disagree in length");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < rows; ++i) members[ids.ids[i]].push_back(i);

  std::map<int, Eigen::VectorXd> out;
  const auto d = f.cols();
  for (auto& [id, rows_of_id] : members) {
    std::stable_sort(rows_of_id.begin(), rows_of_id.end(),
                     [&](std::size_t x, std::size_t y) { return frame_of[x] < frame_of[y]; });
    const auto picks = hard_sample_indices(rows_of_id.size(), m);
    Eigen::VectorXd v(static_cast<Eigen::Index>(picks.size()) * d);
    for (std::size_t k = 0; k < picks.size(); ++k)
      v.segment(static_cast<Eigen::Index>(k) * d, d) = f.row(static_cast<Eigen::Index>(rows_of_id[picks[k]])).transpose();
    out.emplace(id, std::move(v));
  }
  return out;
}

}  // namespace densevoc
