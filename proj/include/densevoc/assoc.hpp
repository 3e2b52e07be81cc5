// Association matrices: preprocessing, greedy identity assignment, ground
// truth association construction and the IoU tracking baseline.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "densevoc/core.hpp"
#include "densevoc/hungarian.hpp"

namespace densevoc {

/// Square association scores over all observations of one video, with the
/// frame of every observation (row order).
struct AssocMatrix {
  Eigen::MatrixXd values;
  std::vector<int> frame_of;

  std::size_t size() const { return frame_of.size(); }
};

/// One positive trajectory id per observation.
struct IdentityAssignment {
  std::vector<int> ids;
};

inline void check_shape(const AssocMatrix& a) {
  const auto m = static_cast<Eigen::Index>(a.frame_of.size());
  if (a.values.rows() != m || a.values.cols() != m)
    throw InvalidInput("association matrix is " + std::to_string(a.values.rows()) + "x" +
                       std::to_string(a.values.cols()) + " but frame_of has " +
                       std::to_string(a.frame_of.size()) + " entries");
}

/// Symmetrizes with an elementwise max, zeroes same-frame pairs and sets the
/// diagonal to 1.
inline AssocMatrix preprocess(const AssocMatrix& a) {
  check_shape(a);
  AssocMatrix out{a.values.cwiseMax(a.values.transpose()), a.frame_of};
  const auto m = static_cast<Eigen::Index>(a.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j && a.frame_of[i] == a.frame_of[j]) out.values(i, j) = 0.0;
    out.values(i, i) = 1.0;
  }
  return out;
}

/// Greedy identity assignment. Repeatedly takes the observation whose
/// thresholded row has the most candidates (lowest index on ties), keeps at
/// most one candidate per frame (highest score, then lowest index), gives the
/// kept set a fresh id and removes it from the candidate matrix.
inline IdentityAssignment assign_identities(const AssocMatrix& input, double theta = 0.5) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidInput("theta must lie in (0,1)");
  const AssocMatrix a = preprocess(input);
  const std::size_t m = a.size();
  const auto at = [&](std::size_t i, std::size_t j) {
    return a.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  std::vector<std::vector<char>> candidate(m, std::vector<char>(m, 0));
  std::vector<int> track_len(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (at(i, j) >= theta) {
        candidate[i][j] = 1;
        ++track_len[i];
      }

  IdentityAssignment out{std::vector<int>(m, 0)};
  int next_id = 0;
  std::size_t remaining = m;
  while (remaining > 0) {
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (track_len[i] > track_len[anchor]) anchor = i;
    if (track_len[anchor] == 0) break;

    // frame -> kept observation
    std::map<int, std::size_t> kept;
    for (std::size_t j = 0; j < m; ++j) {
      if (!candidate[anchor][j]) continue;
      auto [it, inserted] = kept.try_emplace(a.frame_of[j], j);
      if (!inserted && at(anchor, j) > at(anchor, it->second)) it->second = j;
    }

    ++next_id;
    for (const auto& [frame, j] : kept) {
      out.ids[j] = next_id;
      for (std::size_t k = 0; k < m; ++k) {
        if (candidate[j][k]) {
          candidate[j][k] = 0;
          --track_len[j];
        }
        if (candidate[k][j]) {
          candidate[k][j] = 0;
          --track_len[k];
        }
      }
      --remaining;
    }
  }
  return out;
}

/// Binary ground-truth association: per frame, predictions are matched to
/// ground-truth boxes by maximum total IoU (pairs below `iou_thresh` are
/// forbidden); two observations associate iff they matched the same ground
/// truth trajectory. Observation order is frame-major, list order within a
/// frame.
inline AssocMatrix build_gt_association(const std::vector<std::vector<Box>>& pred_frames,
                                        const VideoRecord& gt, double iou_thresh = 0.5) {
  const auto gt_frames = frames_of(gt);
  AssocMatrix out;
  std::vector<int> matched_track;  // -1 when unmatched
  for (std::size_t t = 0; t < pred_frames.size(); ++t) {
    const auto& preds = pred_frames[t];
    std::vector<int> match(preds.size(), -1);
    if (t < gt_frames.size() && !preds.empty() && !gt_frames[t].empty()) {
      const auto& gts = gt_frames[t];
      Eigen::MatrixXd w(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(gts.size()));
      for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < gts.size(); ++j)
          w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(preds[i], gts[j].box);
      for (const auto& [i, j] : solve_max_weight(w, [&](int i, int j) { return w(i, j) >= iou_thresh; }))
        match[static_cast<std::size_t>(i)] = *gts[static_cast<std::size_t>(j)].track_id;
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
      out.frame_of.push_back(static_cast<int>(t));
      matched_track.push_back(match[i]);
    }
  }
  const auto m = static_cast<Eigen::Index>(out.frame_of.size());
  out.values = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.values(i, i) = 1.0;
    if (matched_track[i] < 0) continue;
    for (Eigen::Index j = 0; j < m; ++j)
      if (matched_track[j] == matched_track[i]) out.values(i, j) = 1.0;
  }
  return out;
}

/// Online IoU tracker without re-identification. Detections are linked to the
/// tracks alive in the previous frame by maximum-IoU matching; pairs below
/// `match_thresh` are forbidden. Ids follow the frame-major observation order.
inline IdentityAssignment iou_tracker(const std::vector<std::vector<Detection>>& frames,
                                      double match_thresh = 0.5) {
  IdentityAssignment out;
  std::vector<std::pair<int, Box>> active;  // (id, last box) alive in the previous frame
  int next_id = 0;
  for (const auto& dets : frames) {
    std::vector<int> ids(dets.size(), 0);
    if (!dets.empty() && !active.empty()) {
      Eigen::MatrixXd w(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(active.size()));
      for (std::size_t i = 0; i < dets.size(); ++i)
        for (std::size_t j = 0; j < active.size(); ++j)
          w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(dets[i].box, active[j].second);
      for (const auto& [i, j] : solve_max_weight(w, [&](int i, int j) { return w(i, j) >= match_thresh; }))
        ids[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(j)].first;
    }
    std::vector<std::pair<int, Box>> next_active;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (ids[i] == 0) ids[i] = ++next_id;
      next_active.emplace_back(ids[i], dets[i].box);
      out.ids.push_back(ids[i]);
    }
    active = std::move(next_active);
  }
  return out;
}

}  // namespace densevoc
