// Training loss terms as pure functions, with analytic gradients and a central
// finite-difference checker.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "densevoc/assoc.hpp"
#include "densevoc/core.hpp"

namespace densevoc::losses {

inline constexpr double kProbClamp = 1e-6;

struct LossConfig {
  double alpha = 2.0;  // focal exponent on the prediction
  double beta = 4.0;   // focal exponent on the ground-truth penalty reduction
  double label_smoothing = 0.1;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0) throw InvalidInput("focal weights must be non-negative");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw InvalidInput("label_smoothing must lie in [0,1)");
  }
};

using Heatmap = Eigen::MatrixXd;

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// ---------------------------------------------------------------------------
// Center heatmap focal loss. Cells with ground truth exactly 1 are peaks.

inline void check_heatmaps(const Heatmap& y, const Heatmap& y_gt, int num_objects) {
  if (y.rows() != y_gt.rows() || y.cols() != y_gt.cols()) throw InvalidInput("heatmap shapes differ");
  if (num_objects < 1) throw InvalidInput("heatmap loss needs at least one object");
}

inline double heatmap_loss(const Heatmap& y, const Heatmap& y_gt, int num_objects, const LossConfig& cfg = {}) {
  check_heatmaps(y, y_gt, num_objects);
  cfg.validate();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double p = clamp_prob(y(i, j));
      const double g = y_gt(i, j);
      if (g == 1.0)
        sum += std::pow(1.0 - p, cfg.alpha) * std::log(p);
      else
        sum += std::pow(1.0 - g, cfg.beta) * std::pow(p, cfg.alpha) * std::log(1.0 - p);
    }
  return -sum / num_objects;
}

/// d heatmap_loss / d Y (zero where the prediction is clamped).
inline Heatmap heatmap_loss_grad(const Heatmap& y, const Heatmap& y_gt, int num_objects, const LossConfig& cfg = {}) {
  check_heatmaps(y, y_gt, num_objects);
  Heatmap grad = Heatmap::Zero(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double p = y(i, j);
      if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
      const double g = y_gt(i, j);
      double d = 0.0;
      if (g == 1.0) {
        d = -cfg.alpha * std::pow(1.0 - p, cfg.alpha - 1.0) * std::log(p) + std::pow(1.0 - p, cfg.alpha) / p;
      } else {
        const double w = std::pow(1.0 - g, cfg.beta);
        d = w * (cfg.alpha * std::pow(p, cfg.alpha - 1.0) * std::log(1.0 - p) - std::pow(p, cfg.alpha) / (1.0 - p));
      }
      grad(i, j) = -d / num_objects;
    }
  return grad;
}

// ---------------------------------------------------------------------------
// Box regression.

inline void check_box_lists(std::span<const Box> pred, std::span<const Box> gt) {
  if (pred.size() != gt.size()) throw InvalidInput("box lists differ in length");
  if (pred.empty()) throw InvalidInput("box lists are empty");
}

/// 1 - mean gIoU over paired boxes.
inline double giou_loss(std::span<const Box> pred, std::span<const Box> gt) {
  check_box_lists(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += giou(pred[i], gt[i]);
  return 1.0 - sum / static_cast<double>(pred.size());
}

/// Gradient of giou_loss with respect to the predicted coordinates, laid out
/// as [x1, y1, x2, y2] per box. Assumes well-formed boxes.
inline std::vector<double> giou_loss_grad(std::span<const Box> pred, std::span<const Box> gt) {
  check_box_lists(pred, gt);
  const double scale = -1.0 / static_cast<double>(pred.size());
  std::vector<double> grad(4 * pred.size(), 0.0);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const Box& b = pred[k];
    const Box& g = gt[k];
    const double bw = b.x2 - b.x1, bh = b.y2 - b.y1;
    const double iw = std::min(b.x2, g.x2) - std::max(b.x1, g.x1);
    const double ih = std::min(b.y2, g.y2) - std::max(b.y1, g.y1);
    const bool overlap = iw > 0.0 && ih > 0.0;
    const double inter = overlap ? iw * ih : 0.0;
    const double uni = bw * bh + g.area() - inter;
    const Box c = hull(b, g);
    const double cw = c.x2 - c.x1, ch = c.y2 - c.y1;
    const double carea = cw * ch;

    // Partial derivatives of (box area, intersection, hull area) per coordinate.
    const double d_area[4] = {-bh, -bw, bh, bw};
    double d_inter[4] = {0, 0, 0, 0};
    if (overlap) {
      d_inter[0] = b.x1 > g.x1 ? -ih : 0.0;
      d_inter[1] = b.y1 > g.y1 ? -iw : 0.0;
      d_inter[2] = b.x2 < g.x2 ? ih : 0.0;
      d_inter[3] = b.y2 < g.y2 ? iw : 0.0;
    }
    const double d_hull[4] = {b.x1 < g.x1 ? -ch : 0.0, b.y1 < g.y1 ? -cw : 0.0, b.x2 > g.x2 ? ch : 0.0,
                              b.y2 > g.y2 ? cw : 0.0};
    for (int c4 = 0; c4 < 4; ++c4) {
      const double d_uni = d_area[c4] - d_inter[c4];
      const double d_giou = d_inter[c4] / uni - inter * d_uni / (uni * uni) + d_uni / carea -
                            uni * d_hull[c4] / (carea * carea);
      grad[4 * k + static_cast<std::size_t>(c4)] = scale * d_giou;
    }
  }
  return grad;
}

/// Mean absolute coordinate difference over all 4n coordinates.
inline double roi_reg_loss(std::span<const Box> pred, std::span<const Box> gt) {
  check_box_lists(pred, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::abs(pred[i].x1 - gt[i].x1) + std::abs(pred[i].y1 - gt[i].y1) + std::abs(pred[i].x2 - gt[i].x2) +
           std::abs(pred[i].y2 - gt[i].y2);
  return sum / (4.0 * static_cast<double>(pred.size()));
}

inline std::vector<double> roi_reg_loss_grad(std::span<const Box> pred, std::span<const Box> gt) {
  check_box_lists(pred, gt);
  const double scale = 1.0 / (4.0 * static_cast<double>(pred.size()));
  const auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  std::vector<double> grad;
  grad.reserve(4 * pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    grad.push_back(scale * sign(pred[i].x1 - gt[i].x1));
    grad.push_back(scale * sign(pred[i].y1 - gt[i].y1));
    grad.push_back(scale * sign(pred[i].x2 - gt[i].x2));
    grad.push_back(scale * sign(pred[i].y2 - gt[i].y2));
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Softmax classification and captioning.

inline Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits.array() - lse;
}

/// Foreground/background RoI classification: -log softmax(logits)[label].
inline double roi_cls_loss(const Eigen::Vector2d& logits, int label) {
  if (label != 0 && label != 1) throw InvalidInput("roi label must be 0 or 1");
  return -log_softmax(logits)(label);
}

inline Eigen::Vector2d roi_cls_loss_grad(const Eigen::Vector2d& logits, int label) {
  if (label != 0 && label != 1) throw InvalidInput("roi label must be 0 or 1");
  Eigen::Vector2d g = log_softmax(logits).array().exp();
  g(label) -= 1.0;
  return g;
}

/// Target distribution for one caption token under label smoothing.
inline double smoothed_target(Eigen::Index v, Eigen::Index truth, Eigen::Index vocab, double eps) {
  if (vocab == 1) return 1.0;
  return v == truth ? 1.0 - eps : eps / static_cast<double>(vocab - 1);
}

inline void check_caption_inputs(const Eigen::MatrixXd& logits, std::span<const int> gt_tokens, double eps) {
  if (static_cast<std::size_t>(logits.rows()) != gt_tokens.size())
    throw InvalidInput("caption_loss: one logit row per ground-truth token required");
  if (gt_tokens.empty()) throw InvalidInput("caption_loss: empty caption");
  if (eps < 0.0 || eps >= 1.0) throw InvalidInput("label smoothing must lie in [0,1)");
  for (int t : gt_tokens)
    if (t < 0 || t >= logits.cols()) throw InvalidInput("caption_loss: token index outside vocabulary");
}

/// Mean label-smoothed cross-entropy over caption tokens; rows of `logits`
/// are per-position vocabulary logits.
inline double caption_loss(const Eigen::MatrixXd& logits, std::span<const int> gt_tokens, double eps = 0.1) {
  check_caption_inputs(logits, gt_tokens, eps);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::VectorXd lp = log_softmax(logits.row(i).transpose());
    for (Eigen::Index v = 0; v < logits.cols(); ++v)
      sum -= smoothed_target(v, gt_tokens[static_cast<std::size_t>(i)], logits.cols(), eps) * lp(v);
  }
  return sum / static_cast<double>(logits.rows());
}

inline Eigen::MatrixXd caption_loss_grad(const Eigen::MatrixXd& logits, std::span<const int> gt_tokens,
                                         double eps = 0.1) {
  check_caption_inputs(logits, gt_tokens, eps);
  Eigen::MatrixXd grad(logits.rows(), logits.cols());
  const double inv_len = 1.0 / static_cast<double>(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Eigen::VectorXd p = log_softmax(logits.row(i).transpose()).array().exp();
    for (Eigen::Index v = 0; v < logits.cols(); ++v)
      grad(i, v) = inv_len * (p(v) - smoothed_target(v, gt_tokens[static_cast<std::size_t>(i)], logits.cols(), eps));
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Association.

inline void check_assoc_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_gt) {
  if (a.rows() != a.cols() || a.rows() != a_gt.rows() || a.cols() != a_gt.cols())
    throw InvalidInput("assoc_loss: matrices must be square and equally sized");
  if (a.rows() == 0) throw InvalidInput("assoc_loss: empty matrix");
}

/// Elementwise binary cross-entropy summed and divided by M (not M^2).
inline double assoc_loss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_gt) {
  check_assoc_pair(a, a_gt);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double p = clamp_prob(a(i, j));
      const double t = a_gt(i, j);
      sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
  return sum / static_cast<double>(a.rows());
}

inline double assoc_loss(const AssocMatrix& a, const AssocMatrix& a_gt) { return assoc_loss(a.values, a_gt.values); }

inline Eigen::MatrixXd assoc_loss_grad(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_gt) {
  check_assoc_pair(a, a_gt);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  const double m = static_cast<double>(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double p = a(i, j);
      if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
      grad(i, j) = (p - a_gt(i, j)) / (p * (1.0 - p)) / m;
    }
  return grad;
}

// ---------------------------------------------------------------------------

using ScalarFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<std::vector<double>(std::span<const double>)>;

/// Max over coordinates of |central difference - analytic| / (|analytic| + 1e-8).
inline double finite_diff_check(const ScalarFn& f, const GradFn& grad_f, std::span<const double> point,
                                double h = 1e-5) {
  const std::vector<double> analytic = grad_f(point);
  if (analytic.size() != point.size()) throw InvalidInput("finite_diff_check: gradient has wrong length");
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - analytic[i]) / (std::abs(analytic[i]) + 1e-8));
  }
  return worst;
}

}  // namespace densevoc::losses
