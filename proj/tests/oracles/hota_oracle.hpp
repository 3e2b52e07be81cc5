// Exhaustive HOTA reference: every per-frame partial bijection is enumerated
// and the one with the largest summed (track alignment x IoU) is kept.
#pragma once

#include <algorithm>
#include <cfloat>
#include <map>
#include <utility>
#include <vector>

#include "densevoc/core.hpp"

namespace oracle {

struct Obs {
  int track = 0;
  densevoc::Box box;
};

struct HotaAtAlpha {
  double det_a = 0.0;
  double ass_a = 0.0;
  int tp = 0, fp = 0, fn = 0;
};

namespace hota_detail {

inline double box_iou(const densevoc::Box& a, const densevoc::Box& b) {
  const double aa = std::max(0.0, a.x2 - a.x1) * std::max(0.0, a.y2 - a.y1);
  const double ab = std::max(0.0, b.x2 - b.x1) * std::max(0.0, b.y2 - b.y1);
  if (aa <= 0.0 || ab <= 0.0) return 0.0;
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  return inter / (aa + ab - inter);
}

// All partial injections gt -> pred, as vectors of pred index or -1.
inline void enumerate(std::size_t g, std::size_t np, std::vector<int>& cur, std::vector<char>& used,
                      std::vector<std::vector<int>>& out) {
  if (g == cur.size()) {
    out.push_back(cur);
    return;
  }
  cur[g] = -1;
  enumerate(g + 1, np, cur, used, out);
  for (std::size_t p = 0; p < np; ++p) {
    if (used[p]) continue;
    used[p] = 1;
    cur[g] = static_cast<int>(p);
    enumerate(g + 1, np, cur, used, out);
    used[p] = 0;
  }
}

}  // namespace hota_detail

/// frames[t] = (gt observations, pred observations). Returns one entry per alpha.
inline std::vector<HotaAtAlpha> brute_force_hota(
    const std::vector<std::pair<std::vector<Obs>, std::vector<Obs>>>& frames, const std::vector<double>& alphas) {
  using hota_detail::box_iou;
  std::map<int, int> gt_len, pred_len;
  for (const auto& [gts, preds] : frames) {
    for (const auto& o : gts) ++gt_len[o.track];
    for (const auto& o : preds) ++pred_len[o.track];
  }

  // Soft co-occurrence per track pair.
  std::map<std::pair<int, int>, double> potential;
  for (const auto& [gts, preds] : frames) {
    std::vector<double> row(gts.size(), 0.0), col(preds.size(), 0.0);
    for (std::size_t g = 0; g < gts.size(); ++g)
      for (std::size_t p = 0; p < preds.size(); ++p) {
        const double v = box_iou(gts[g].box, preds[p].box);
        row[g] += v;
        col[p] += v;
      }
    for (std::size_t g = 0; g < gts.size(); ++g)
      for (std::size_t p = 0; p < preds.size(); ++p) {
        const double v = box_iou(gts[g].box, preds[p].box);
        const double d = row[g] + col[p] - v;
        if (d > DBL_EPSILON) potential[{gts[g].track, preds[p].track}] += v / d;
      }
  }
  auto alignment = [&](int gt_track, int pred_track) {
    auto it = potential.find({gt_track, pred_track});
    if (it == potential.end()) return 0.0;
    return it->second / (gt_len[gt_track] + pred_len[pred_track] - it->second);
  };

  // Best assignment per frame; pairs kept as (gt track, pred track, iou).
  std::vector<std::vector<std::tuple<int, int, double>>> assigned;
  int total_gt = 0, total_pred = 0;
  for (const auto& [gts, preds] : frames) {
    total_gt += static_cast<int>(gts.size());
    total_pred += static_cast<int>(preds.size());
    std::vector<std::vector<int>> all;
    std::vector<int> cur(gts.size(), -1);
    std::vector<char> used(preds.size(), 0);
    hota_detail::enumerate(0, preds.size(), cur, used, all);
    double best = -1.0;
    std::vector<int> best_map;
    for (const auto& mapping : all) {
      double s = 0.0;
      for (std::size_t g = 0; g < mapping.size(); ++g)
        if (mapping[g] >= 0) {
          const auto& pr = preds[static_cast<std::size_t>(mapping[g])];
          s += alignment(gts[g].track, pr.track) * box_iou(gts[g].box, pr.box);
        }
      if (s > best) {
        best = s;
        best_map = mapping;
      }
    }
    std::vector<std::tuple<int, int, double>> pairs;
    for (std::size_t g = 0; g < best_map.size(); ++g)
      if (best_map[g] >= 0) {
        const auto& pr = preds[static_cast<std::size_t>(best_map[g])];
        const double v = box_iou(gts[g].box, pr.box);
        if (v > 0.0) pairs.emplace_back(gts[g].track, pr.track, v);
      }
    assigned.push_back(std::move(pairs));
  }

  std::vector<HotaAtAlpha> out;
  for (double alpha : alphas) {
    std::map<std::pair<int, int>, int> tpa;
    int tp = 0;
    for (const auto& pairs : assigned)
      for (const auto& [g, p, v] : pairs)
        if (v >= alpha - DBL_EPSILON) {
          ++tp;
          ++tpa[{g, p}];
        }
    HotaAtAlpha r;
    r.tp = tp;
    r.fp = total_pred - tp;
    r.fn = total_gt - tp;
    r.det_a = tp + r.fp + r.fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + r.fp + r.fn);
    if (tp == 0) {
      r.ass_a = 1.0;
    } else {
      double sum = 0.0;
      for (const auto& [key, n] : tpa) {
        const double ass_iou = static_cast<double>(n) / (gt_len[key.first] + pred_len[key.second] - n);
        sum += n * ass_iou;
      }
      r.ass_a = sum / tp;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace oracle
