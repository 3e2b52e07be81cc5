// Seeded synthetic ground truth and perturbed predictions.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "densevoc/capmetrics.hpp"
#include "densevoc/core.hpp"
#include "densevoc/random.hpp"

namespace densevoc::synth {

struct SynthConfig {
  std::uint64_t seed = 42;
  int num_videos = 20;
  int frames_per_video = 30;
  int objects_per_video = 4;
  double frame_width = 640.0;
  double frame_height = 360.0;
  double max_speed = 4.0;          // pixels per frame
  double caption_fraction = 0.75;  // share of gt trajectories with a caption

  // Prediction perturbations.
  double box_jitter = 0.0;  // std-dev of corner noise, relative to box size
  double drop_rate = 0.0;
  double false_positive_rate = 0.0;  // extra boxes per gt detection
  double id_switch_rate = 0.0;       // share of trajectories split in two
  double caption_corruption_rate = 0.0;

  void validate() const;
};

inline void SynthConfig::validate() const {
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput(std::string(name) + " must lie in [0,1]");
  };
  if (num_videos < 0 || frames_per_video < 1 || objects_per_video < 0)
    throw InvalidInput("synthetic sizes must be non-negative with at least one frame");
  if (!(frame_width > 0.0 && frame_height > 0.0)) throw InvalidInput("frame size must be positive");
  if (!(box_jitter >= 0.0)) throw InvalidInput("box jitter must be >= 0");
  rate(caption_fraction, "caption fraction");
  rate(drop_rate, "drop rate");
  rate(false_positive_rate, "false positive rate");
  rate(id_switch_rate, "id switch rate");
  rate(caption_corruption_rate, "caption corruption rate");
}

namespace vocab {
inline constexpr std::array<const char*, 8> kColors{"red", "blue", "green", "white", "black", "yellow", "gray", "brown"};
inline constexpr std::array<const char*, 8> kNouns{"car", "dog", "man", "woman", "bicycle", "horse", "child", "bus"};
inline constexpr std::array<const char*, 8> kActions{"walking", "running", "turning", "parked", "jumping",
                                                     "standing", "crossing", "waiting"};
inline constexpr std::array<const char*, 6> kPlaces{"on the road", "near the tree", "in the park", "by the house",
                                                    "on the grass", "at the corner"};
}  // namespace vocab

struct CaptionDraw {
  std::size_t color, noun, action, place;
};

inline CaptionDraw draw_caption(Rng& rng) {
  return {rng.index(vocab::kColors.size()), rng.index(vocab::kNouns.size()), rng.index(vocab::kActions.size()),
          rng.index(vocab::kPlaces.size())};
}

inline std::string caption_text(const CaptionDraw& d) {
  return std::string("a ") + vocab::kColors[d.color] + " " + vocab::kNouns[d.noun] + " " +
         vocab::kActions[d.action] + " " + vocab::kPlaces[d.place];
}

/// Replaces noun and action with different words; colour and place survive.
inline CaptionDraw corrupt(CaptionDraw d, const CaptionDraw& shift) {
  d.noun = (d.noun + 1 + shift.noun % (vocab::kNouns.size() - 1)) % vocab::kNouns.size();
  d.action = (d.action + 1 + shift.action % (vocab::kActions.size() - 1)) % vocab::kActions.size();
  return d;
}

struct SynthPair {
  std::vector<VideoRecord> gt;
  std::vector<VideoRecord> pred;
};

namespace detail {

/// Position of a point moving linearly inside [lo, hi], reflected at the ends.
inline double bounce(double pos, double lo, double hi) {
  const double range = hi - lo;
  if (range <= 0.0) return lo;
  double p = std::fmod(pos - lo, 2.0 * range);
  if (p < 0.0) p += 2.0 * range;
  return lo + (p <= range ? p : 2.0 * range - p);
}

// Every draw happens whether or not it is used, so the same seed yields the
// same underlying scene and noise at any perturbation rate.
inline void generate_video(const SynthConfig& cfg, int index, VideoRecord& gt, VideoRecord& pred) {
  Rng rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  const int nf = cfg.frames_per_video;
  char name[32];
  std::snprintf(name, sizeof name, "synth_%04d", index);
  gt.video_id = pred.video_id = name;
  gt.num_frames = pred.num_frames = nf;

  int next_pred_id = cfg.objects_per_video * 2 + 1;
  std::vector<Trajectory> fps;
  for (int o = 0; o < cfg.objects_per_video; ++o) {
    const double w = rng.uniform(40.0, 120.0), h = rng.uniform(40.0, 120.0);
    const double x0 = rng.uniform(0.0, cfg.frame_width - w), y0 = rng.uniform(0.0, cfg.frame_height - h);
    const double vx = rng.uniform(-cfg.max_speed, cfg.max_speed), vy = rng.uniform(-cfg.max_speed, cfg.max_speed);
    const int start = static_cast<int>(rng.index(static_cast<std::size_t>(nf / 3 + 1)));
    const int end = nf - 1 - static_cast<int>(rng.index(static_cast<std::size_t>(nf / 3 + 1)));
    const double u_captioned = rng.uniform();
    const CaptionDraw cap = draw_caption(rng);
    const double u_switch = rng.uniform(), u_cut = rng.uniform(), u_corrupt = rng.uniform();
    const CaptionDraw shift = draw_caption(rng);

    Trajectory g;
    g.track_id = o + 1;
    if (u_captioned < cfg.caption_fraction) g.caption = make_caption(caption_text(cap));
    Trajectory p;
    p.track_id = o + 1;
    if (g.caption)
      p.caption = u_corrupt < cfg.caption_corruption_rate ? make_caption(caption_text(corrupt(cap, shift))) : g.caption;

    const int len = std::max(0, end - start + 1);
    const int cut = len >= 2 && u_switch < cfg.id_switch_rate ? 1 + static_cast<int>(u_cut * (len - 1)) : len;
    Trajectory tail;
    tail.track_id = cfg.objects_per_video + o + 1;
    tail.caption = p.caption;

    for (int f = start; f <= end; ++f) {
      const double t = f - start;
      const double x = bounce(x0 + vx * t, 0.0, cfg.frame_width - w);
      const double y = bounce(y0 + vy * t, 0.0, cfg.frame_height - h);
      const Box b{x, y, x + w, y + h};
      g.detections.push_back(Detection{f, b, 1.0, std::nullopt, std::nullopt});

      const double u_drop = rng.uniform();
      double z[4];
      for (double& zi : z) zi = rng.normal();
      const double u_fp = rng.uniform();
      const double fw = rng.uniform(40.0, 120.0), fh = rng.uniform(40.0, 120.0);
      const double fx = rng.uniform(0.0, cfg.frame_width - fw), fy = rng.uniform(0.0, cfg.frame_height - fh);
      const double fscore = rng.uniform();

      if (u_drop >= cfg.drop_rate) {
        const double s = cfg.box_jitter;
        Box pb{b.x1 + s * w * z[0], b.y1 + s * h * z[1], b.x2 + s * w * z[2], b.y2 + s * h * z[3]};
        if (pb.x2 < pb.x1) pb.x2 = pb.x1;
        if (pb.y2 < pb.y1) pb.y2 = pb.y1;
        Detection d{f, pb, 1.0, std::nullopt, std::nullopt};
        (f - start < cut ? p : tail).detections.push_back(d);
      }
      if (u_fp < cfg.false_positive_rate) {
        Trajectory fp;
        fp.track_id = 0;
        fp.caption = make_caption(caption_text(shift));
        fp.detections.push_back(Detection{f, Box{fx, fy, fx + fw, fy + fh}, 0.5 * fscore, std::nullopt, std::nullopt});
        fps.push_back(std::move(fp));
      }
    }
    gt.trajectories.push_back(std::move(g));
    if (!p.detections.empty()) pred.trajectories.push_back(std::move(p));
    if (!tail.detections.empty()) pred.trajectories.push_back(std::move(tail));
  }
  for (auto& fp : fps) {
    fp.track_id = next_pred_id++;
    pred.trajectories.push_back(std::move(fp));
  }
}

}  // namespace detail

/// Generates `num_videos` ground-truth videos and matching predictions.
/// With all perturbations at zero the predictions equal the ground truth.
inline SynthPair generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthPair out;
  out.gt.resize(static_cast<std::size_t>(cfg.num_videos));
  out.pred.resize(static_cast<std::size_t>(cfg.num_videos));
  for (int i = 0; i < cfg.num_videos; ++i)
    detail::generate_video(cfg, i, out.gt[static_cast<std::size_t>(i)], out.pred[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace densevoc::synth
