// Spatial grounding: per frame, pick the proposal with the highest
// detection-score-weighted query likelihood.
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "densevoc/core.hpp"
#include "densevoc/eval.hpp"

namespace densevoc {

enum class LikelihoodMode { kPerFrame, kPerTrack };

/// Identifies the observation whose query likelihood is requested.
struct LikelihoodKey {
  std::string video_id;
  int frame = 0;
  std::size_t observation_index = 0;  // canonical index within the video
  int track_id = 0;
  std::string query_id;
};

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Negative log-likelihood of a query caption for one observation or track.
class CaptionScorer {
 public:
  virtual ~CaptionScorer() = default;
  virtual double nll(const LikelihoodKey& key, LikelihoodMode mode) const = 0;
};

/// Same NLL for everything.
class UniformScorer : public CaptionScorer {
 public:
  explicit UniformScorer(double value = 1.0) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidInput("uniform NLL must be finite and >= 0");
  }
  double nll(const LikelihoodKey&, LikelihoodMode) const override { return value_; }

 private:
  double value_;
};

/// NLLs read from a likelihood table.
class TableScorer : public CaptionScorer {
 public:
  void set_observation(const std::string& video, int frame, std::size_t obs, const std::string& query, double nll) {
    check(nll);
    per_obs_[{video, frame, obs, query}] = nll;
  }
  void set_track(const std::string& video, int track_id, const std::string& query, double nll) {
    check(nll);
    per_track_[{video, track_id, query}] = nll;
  }

  double nll(const LikelihoodKey& k, LikelihoodMode mode) const override {
    if (mode == LikelihoodMode::kPerTrack) {
      auto it = per_track_.find({k.video_id, k.track_id, k.query_id});
      if (it == per_track_.end())
        throw ScorerError("no likelihood for video '" + k.video_id + "' track " + std::to_string(k.track_id) +
                          " query '" + k.query_id + "'");
      return it->second;
    }
    auto it = per_obs_.find({k.video_id, k.frame, k.observation_index, k.query_id});
    if (it == per_obs_.end())
      throw ScorerError("no likelihood for video '" + k.video_id + "' frame " + std::to_string(k.frame) +
                        " observation " + std::to_string(k.observation_index) + " query '" + k.query_id + "'");
    return it->second;
  }

 private:
  static void check(double nll) {
    if (!(nll >= 0.0) || !std::isfinite(nll)) throw InvalidInput("NLL must be finite and >= 0");
  }
  std::map<std::tuple<std::string, int, std::size_t, std::string>, double> per_obs_;
  std::map<std::tuple<std::string, int, std::string>, double> per_track_;
};

struct Proposal {
  Box box;
  double score = 1.0;
};

struct Selection {
  std::size_t index = 0;
  Box box;
};

struct GroundingResult {
  std::vector<std::optional<Selection>> selected;  // per frame
  std::vector<std::vector<double>> weighted;       // per frame, s * exp(-nll) per candidate
};

/// Per frame, argmax_k score_k * exp(-nll_k) (lowest index on ties). Frames
/// without candidates select nothing.
inline GroundingResult select_boxes(const std::vector<std::vector<Proposal>>& candidates,
                                    const std::vector<std::vector<double>>& nll) {
  if (candidates.size() != nll.size()) throw InvalidInput("select_boxes: candidate and NLL frame counts differ");
  GroundingResult out;
  out.selected.resize(candidates.size());
  out.weighted.resize(candidates.size());
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    if (candidates[t].size() != nll[t].size())
      throw InvalidInput("select_boxes: frame " + std::to_string(t) + " has mismatched NLL count");
    for (std::size_t k = 0; k < candidates[t].size(); ++k) {
      const double w = candidates[t][k].score * std::exp(-nll[t][k]);
      out.weighted[t].push_back(w);
      if (!out.selected[t] || w > out.weighted[t][out.selected[t]->index])
        out.selected[t] = Selection{k, candidates[t][k].box};
    }
  }
  return out;
}

struct GroundingQuery {
  std::string video_id;
  std::string query_id;
  Caption caption;
  Span span;            // ground-truth temporal extent
  FrameBoxes gt_boxes;  // indexed by frame
};

struct GroundingOutcome {
  GroundingResult result;
  GroundingIous ious;
};

/// Grounds `query` inside its ground-truth span using the prediction video's
/// detections as proposals, then scores the selection. The predicted span
/// defaults to the ground-truth span (temporal localization given).
inline GroundingOutcome ground_and_score(const VideoRecord& pred, const GroundingQuery& query,
                                         const CaptionScorer& scorer, LikelihoodMode mode = LikelihoodMode::kPerFrame,
                                         std::optional<Span> pred_span = std::nullopt) {
  const Span span = pred_span.value_or(query.span);
  const int num_frames = std::max(pred.num_frames, span.end + 1);
  std::vector<std::vector<Proposal>> cands(static_cast<std::size_t>(std::max(num_frames, 0)));
  std::vector<std::vector<double>> nlls(cands.size());
  std::size_t obs = 0;
  for (const auto& ref : observation_order(pred)) {
    const std::size_t idx = obs++;
    if (ref.frame < span.start || ref.frame > span.end) continue;
    const Trajectory& t = pred.trajectories[ref.track_index];
    const Detection& d = t.detections[ref.det_index];
    LikelihoodKey key{pred.video_id, d.frame, idx, t.track_id, query.query_id};
    cands[static_cast<std::size_t>(d.frame)].push_back({d.box, d.score});
    nlls[static_cast<std::size_t>(d.frame)].push_back(scorer.nll(key, mode));
  }
  GroundingOutcome out;
  out.result = select_boxes(cands, nlls);
  FrameBoxes chosen(out.result.selected.size());
  for (std::size_t t = 0; t < chosen.size(); ++t)
    if (out.result.selected[t]) chosen[t] = out.result.selected[t]->box;
  out.ious = grounding_ious(chosen, span, query.gt_boxes, query.span);
  return out;
}

}  // namespace densevoc
