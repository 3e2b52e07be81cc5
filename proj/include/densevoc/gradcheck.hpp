// Randomized finite-difference checks of every loss gradient.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "densevoc/losses.hpp"
#include "densevoc/random.hpp"

namespace densevoc::losses {

struct GradCheckRow {
  std::string loss;
  int seeds = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

namespace detail {

inline std::vector<double> flat(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

inline Eigen::MatrixXd unflat(std::span<const double> v, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  return m;
}

inline std::vector<Box> unflat_boxes(std::span<const double> v) {
  std::vector<Box> out;
  for (std::size_t i = 0; i + 3 < v.size(); i += 4) out.push_back(Box{v[i], v[i + 1], v[i + 2], v[i + 3]});
  return out;
}

inline std::vector<double> flat_boxes(const std::vector<Box>& boxes) {
  std::vector<double> out;
  for (const auto& b : boxes) out.insert(out.end(), {b.x1, b.y1, b.x2, b.y2});
  return out;
}

// Ground-truth boxes and overlapping, generically positioned predictions.
inline void random_box_pairs(Rng& rng, std::size_t n, std::vector<Box>& pred, std::vector<Box>& gt) {
  for (std::size_t k = 0; k < n; ++k) {
    const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
    const double w = rng.uniform(20, 60), h = rng.uniform(20, 60);
    const Box g{x, y, x + w, y + h};
    gt.push_back(g);
    pred.push_back(Box{g.x1 + rng.uniform(-5, 5), g.y1 + rng.uniform(-5, 5), g.x2 + rng.uniform(-5, 5),
                       g.y2 + rng.uniform(-5, 5)});
  }
}

}  // namespace detail

/// Runs each loss's gradient against central differences on `seeds` random
/// instances; a loss passes when every instance stays within `tolerance`.
inline std::vector<GradCheckRow> run_gradient_checks(int seeds = 100, double tolerance = 1e-4,
                                                     std::uint64_t base_seed = 1) {
  std::vector<GradCheckRow> rows{{"heatmap", seeds}, {"giou", seeds},    {"roi_reg", seeds},
                                 {"roi_cls", seeds}, {"caption", seeds}, {"assoc", seeds}};
  const LossConfig cfg;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(splitmix64(base_seed + static_cast<std::uint64_t>(s)));
    double err[6];

    {
      Heatmap y(4, 5), g(4, 5);
      for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) {
          y(i, j) = rng.uniform(0.05, 0.95);
          g(i, j) = rng.uniform(0.0, 0.9);
        }
      g(rng.index(4), rng.index(5)) = 1.0;
      const auto pt = detail::flat(y);
      err[0] = finite_diff_check([&](std::span<const double> v) { return heatmap_loss(detail::unflat(v, 4, 5), g, 2, cfg); },
                                 [&](std::span<const double> v) {
                                   return detail::flat(heatmap_loss_grad(detail::unflat(v, 4, 5), g, 2, cfg));
                                 },
                                 pt);
    }
    {
      std::vector<Box> p, g;
      detail::random_box_pairs(rng, 3, p, g);
      const auto pt = detail::flat_boxes(p);
      err[1] = finite_diff_check([&](std::span<const double> v) { return giou_loss(detail::unflat_boxes(v), g); },
                                 [&](std::span<const double> v) { return giou_loss_grad(detail::unflat_boxes(v), g); },
                                 pt);
      err[2] = finite_diff_check([&](std::span<const double> v) { return roi_reg_loss(detail::unflat_boxes(v), g); },
                                 [&](std::span<const double> v) { return roi_reg_loss_grad(detail::unflat_boxes(v), g); },
                                 pt);
    }
    {
      const Eigen::Vector2d logits(rng.normal() * 2.0, rng.normal() * 2.0);
      const int label = static_cast<int>(rng.index(2));
      const std::vector<double> pt{logits(0), logits(1)};
      err[3] = finite_diff_check([&](std::span<const double> v) { return roi_cls_loss(Eigen::Vector2d(v[0], v[1]), label); },
                                 [&](std::span<const double> v) {
                                   const Eigen::Vector2d gr = roi_cls_loss_grad(Eigen::Vector2d(v[0], v[1]), label);
                                   return std::vector<double>{gr(0), gr(1)};
                                 },
                                 pt);
    }
    {
      const Eigen::Index len = 5, vocab = 7;
      Eigen::MatrixXd logits(len, vocab);
      for (Eigen::Index i = 0; i < len; ++i)
        for (Eigen::Index j = 0; j < vocab; ++j) logits(i, j) = rng.normal();
      std::vector<int> tokens;
      for (Eigen::Index i = 0; i < len; ++i) tokens.push_back(static_cast<int>(rng.index(vocab)));
      const auto pt = detail::flat(logits);
      err[4] = finite_diff_check(
          [&](std::span<const double> v) { return caption_loss(detail::unflat(v, len, vocab), tokens, cfg.label_smoothing); },
          [&](std::span<const double> v) {
            return detail::flat(caption_loss_grad(detail::unflat(v, len, vocab), tokens, cfg.label_smoothing));
          },
          pt);
    }
    {
      const Eigen::Index m = 5;
      Eigen::MatrixXd a(m, m), t(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          a(i, j) = rng.uniform(0.05, 0.95);
          t(i, j) = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
      const auto pt = detail::flat(a);
      err[5] = finite_diff_check([&](std::span<const double> v) { return assoc_loss(detail::unflat(v, m, m), t); },
                                 [&](std::span<const double> v) { return detail::flat(assoc_loss_grad(detail::unflat(v, m, m), t)); },
                                 pt);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) rows[k].max_rel_error = std::max(rows[k].max_rel_error, err[k]);
  }
  for (auto& r : rows) r.passed = r.max_rel_error <= tolerance;
  return rows;
}

}  // namespace densevoc::losses
