#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "densevoc/eval.hpp"
#include "densevoc/random.hpp"
#include "densevoc/synth.hpp"
#include "oracles/ap_oracle.hpp"
#include "oracles/hota_oracle.hpp"
#include "support/builders.hpp"

using namespace densevoc;
using namespace testing_support;
using densevoc::synth::SynthConfig;
using densevoc::synth::generate;

namespace {

const Box kUnit{0, 0, 10, 10};

ChotaConfig exact_config() {
  ChotaConfig cfg;
  cfg.captions.meteor = false;
  cfg.captions.cider = false;
  cfg.captions.exact = true;
  return cfg;
}

void expect_same_report(const EvalReport& a, const EvalReport& b) {
  EXPECT_EQ(a.det_a, b.det_a);
  EXPECT_EQ(a.ass_a, b.ass_a);
  EXPECT_EQ(a.cap_a, b.cap_a);
  EXPECT_EQ(a.chota, b.chota);
  ASSERT_EQ(a.per_alpha.size(), b.per_alpha.size());
  for (std::size_t k = 0; k < a.per_alpha.size(); ++k) {
    EXPECT_EQ(a.per_alpha[k].tp, b.per_alpha[k].tp);
    EXPECT_EQ(a.per_alpha[k].ass_a, b.per_alpha[k].ass_a);
    EXPECT_EQ(a.per_alpha[k].cap_a, b.per_alpha[k].cap_a);
  }
}

}  // namespace

TEST(MatchAtAlpha, PerfectPrediction) {
  const auto gt = video("v", 4, {static_track(1, 0, 3, kUnit), static_track(2, 1, 2, kUnit.translated(30, 0))});
  for (double alpha : AlphaGrid::standard().alphas) {
    const auto m = match_at_alpha(gt, gt, alpha);
    EXPECT_EQ(m.tp.size(), 6u);
    EXPECT_TRUE(m.fp.empty());
    EXPECT_TRUE(m.fn.empty());
  }
}

TEST(MatchAtAlpha, EmptyPrediction) {
  const auto gt = video("v", 4, {static_track(1, 0, 3, kUnit)});
  const auto m = match_at_alpha(video("v", 4, {}), gt, 0.5);
  EXPECT_TRUE(m.tp.empty());
  EXPECT_EQ(m.fn.size(), 4u);
  EXPECT_EQ(det_a(m), 0.0);
  EXPECT_EQ(ass_a(m), 1.0);
}

TEST(MatchAtAlpha, CrossingTracksMatchExhaustiveOracle) {
  // Two gt tracks swap sides; the predictions follow with uneven overlap.
  auto g1 = track(1, {{0, {0, 0, 10, 10}}, {1, {4, 0, 14, 10}}, {2, {8, 0, 18, 10}}, {3, {12, 0, 22, 10}}});
  auto g2 = track(2, {{0, {12, 0, 22, 10}}, {1, {8, 0, 18, 10}}, {2, {4, 0, 14, 10}}, {3, {0, 0, 10, 10}}});
  auto p1 = track(5, {{0, {1, 0, 11, 10}}, {1, {5, 1, 15, 11}}, {2, {5, 0, 15, 10}}, {3, {1, 1, 11, 11}}});
  auto p2 = track(6, {{0, {11, 1, 21, 11}}, {1, {7, 0, 17, 10}}, {2, {9, 1, 19, 11}}, {3, {11, 0, 21, 10}}});
  const auto gt = video("v", 4, {g1, g2});
  const auto pred = video("v", 4, {p1, p2});
  std::vector<std::pair<std::vector<oracle::Obs>, std::vector<oracle::Obs>>> frames(4);
  for (const auto& t : gt.trajectories)
    for (const auto& d : t.detections) frames[d.frame].first.push_back({t.track_id, d.box});
  for (const auto& t : pred.trajectories)
    for (const auto& d : t.detections) frames[d.frame].second.push_back({t.track_id, d.box});
  const auto alphas = AlphaGrid::standard().alphas;
  const auto ref = oracle::brute_force_hota(frames, alphas);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const auto m = match_at_alpha(pred, gt, alphas[k]);
    EXPECT_EQ(static_cast<int>(m.tp.size()), ref[k].tp) << alphas[k];
    EXPECT_NEAR(det_a(m), ref[k].det_a, 1e-9);
    EXPECT_NEAR(ass_a(m), ref[k].ass_a, 1e-9);
  }
}

TEST(HotaOracle, RandomTinyInstances) {
  const auto alphas = AlphaGrid::standard().alphas;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = random_tiny_instance(seed);
    const auto ref = oracle::brute_force_hota(inst.frames, alphas);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      const auto m = match_at_alpha(inst.pred, inst.gt, alphas[k]);
      ASSERT_EQ(static_cast<int>(m.tp.size()), ref[k].tp) << "seed " << seed << " alpha " << alphas[k];
      ASSERT_NEAR(det_a(m), ref[k].det_a, 1e-9) << "seed " << seed;
      ASSERT_NEAR(ass_a(m), ref[k].ass_a, 1e-9) << "seed " << seed;
    }
    ChotaConfig cfg;
    cfg.grid.alphas = alphas;
    const auto rep = chota({inst.pred}, {inst.gt}, cfg);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      ASSERT_NEAR(rep.per_alpha[k].det_a, ref[k].det_a, 1e-9);
      ASSERT_NEAR(rep.per_alpha[k].ass_a, ref[k].ass_a, 1e-9);
    }
  }
}

TEST(DetA, Examples) {
  EXPECT_DOUBLE_EQ(det_a(3, 1, 1), 0.6);
  EXPECT_EQ(det_a(5, 0, 0), 1.0);
  EXPECT_EQ(det_a(0, 0, 4), 0.0);
  EXPECT_EQ(det_a(0, 0, 0), 1.0);
}

TEST(DetA, DuplicatedPredictionsHalveDetA) {
  const auto gt = video("v", 4, {static_track(1, 0, 3, kUnit)});
  const auto pred = video("v", 4, {static_track(7, 0, 3, kUnit), static_track(8, 0, 3, kUnit)});
  for (double alpha : AlphaGrid::standard().alphas) {
    const auto m = match_at_alpha(pred, gt, alpha);
    EXPECT_EQ(m.tp.size(), 4u);
    EXPECT_EQ(m.fp.size(), 4u);
    EXPECT_EQ(det_a(m), 0.5);
  }
}

TEST(AssA, PerfectSingleTrack) {
  const auto gt = video("v", 5, {static_track(1, 0, 4, kUnit)});
  EXPECT_EQ(ass_a(match_at_alpha(gt, gt, 0.5)), 1.0);
}

TEST(AssA, SplitTrackGivesHalf) {
  const auto gt = video("v", 4, {static_track(1, 0, 3, kUnit)});
  const auto pred = video("v", 4, {static_track(3, 0, 1, kUnit), static_track(4, 2, 3, kUnit)});
  for (double alpha : AlphaGrid::standard().alphas) {
    const auto m = match_at_alpha(pred, gt, alpha);
    EXPECT_EQ(m.tp.size(), 4u);
    EXPECT_EQ(ass_a(m), 0.5);
  }
  const auto rep = chota({pred}, {gt}, ChotaConfig{});
  EXPECT_EQ(rep.ass_a, 0.5);
  EXPECT_EQ(rep.det_a, 1.0);
}

TEST(CapA, IdenticalCaptionsMeteorOnly) {
  const auto gt = video("v", 3, {static_track(1, 0, 2, kUnit, "a dog runs"), static_track(2, 0, 1, kUnit.translated(40, 0), "cat")});
  CaptionMetricConfig cfg;
  cfg.cider = false;
  const IdfTable idf = build_idf({gt});
  const double v = cap_a(match_at_alpha(gt, gt, 0.5), gt, gt, idf, cfg);
  const double self3 = 1.0 - 0.5 / 27.0, self1 = 0.5;
  EXPECT_NEAR(v, (3 * self3 + 2 * self1) / 5, 1e-15);
}

TEST(CapA, NoCaptionedTruePositivesGivesZero) {
  const auto gt = video("v", 3, {static_track(1, 0, 2, kUnit, "a dog runs")});
  const auto pred = video("v", 3, {static_track(5, 0, 2, kUnit.translated(50, 50), "a dog runs")});
  const IdfTable idf = build_idf({gt});
  EXPECT_EQ(cap_a(match_at_alpha(pred, gt, 0.5), pred, gt, idf, {}), 0.0);
  const auto rep = chota({pred}, {gt}, ChotaConfig{});
  EXPECT_TRUE(rep.cap_a_defined);
  EXPECT_EQ(rep.cap_a, 0.0);
  EXPECT_EQ(rep.chota, 0.0);
}

TEST(CapA, MeanOfSubScores) {
  // "dog" against itself scores 0.5 under METEOR; the sidecar supplies 0.3.
  const auto gt = video("v", 1, {static_track(1, 0, 0, kUnit, "dog")});
  const auto pred = video("v", 1, {static_track(9, 0, 0, kUnit, "dog")});
  TableExternalScorer ext;
  ext.set({"v", 0, 1}, 0.3);
  CaptionMetricConfig cfg;
  cfg.cider = false;
  cfg.external = &ext;
  EXPECT_NEAR(cap_a(match_at_alpha(pred, gt, 0.5), pred, gt, build_idf({gt}), cfg), 0.4, 1e-15);
}

TEST(CapA, PredictionWithoutCaptionScoresZero) {
  const auto gt = video("v", 2, {static_track(1, 0, 1, kUnit, "a red car")});
  const auto pred = video("v", 2, {static_track(4, 0, 1, kUnit)});
  const auto rep = chota({pred}, {gt}, ChotaConfig{});
  EXPECT_EQ(rep.cap_a, 0.0);
  EXPECT_EQ(rep.per_alpha.front().tp_prime, 2u);
}

TEST(Chota, PublishedTriples) {
  EXPECT_NEAR(chota_combine(0.642, 0.659, 0.391), 0.549, 0.0005);
  EXPECT_NEAR(chota_combine(0.644, 0.659, 0.384), 0.546, 0.0005);
  EXPECT_NEAR(chota_combine(0.514, 0.596, 0.098), 0.311, 0.0005);
  EXPECT_NEAR(chota_combine(0.658, 0.704, 0.397), 0.569, 0.0005);
  EXPECT_EQ(chota_combine(1, 1, 1), 1.0);
}

TEST(Chota, WithoutCaptionsFallsBackToHota) {
  const auto gt = video("v", 4, {static_track(1, 0, 3, kUnit)});
  const auto pred = video("v", 4, {static_track(3, 0, 1, kUnit), static_track(4, 2, 3, kUnit)});
  const auto rep = chota({pred}, {gt}, ChotaConfig{});
  EXPECT_FALSE(rep.cap_a_defined);
  EXPECT_EQ(rep.chota, rep.hota);
  EXPECT_DOUBLE_EQ(rep.hota, std::sqrt(0.5));
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Chota, PerfectPredictionWithExactScorer) {
  SynthConfig sc;
  sc.num_videos = 3;
  const auto gt = generate(sc).gt;
  const auto rep = chota(gt, gt, exact_config());
  EXPECT_EQ(rep.det_a, 1.0);
  EXPECT_EQ(rep.ass_a, 1.0);
  EXPECT_EQ(rep.cap_a, 1.0);
  EXPECT_EQ(rep.chota, 1.0);
}

TEST(Chota, MissingPredictionVideoCountsAsFalseNegatives) {
  const auto a = video("a", 2, {static_track(1, 0, 1, kUnit)});
  const auto b = video("b", 2, {static_track(1, 0, 1, kUnit)});
  const auto rep = chota({a}, {a, b}, ChotaConfig{});
  EXPECT_EQ(rep.per_alpha.front().fn, 2u);
  EXPECT_EQ(rep.det_a, 0.5);
  ASSERT_EQ(rep.per_video.size(), 2u);
  EXPECT_TRUE(rep.per_video[1].prediction_missing);
  EXPECT_TRUE(std::any_of(rep.warnings.begin(), rep.warnings.end(),
                          [](const std::string& w) { return w.find("'b' missing") != std::string::npos; }));
}

TEST(Chota, FixedAlphaCapA) {
  const auto gt = video("v", 1, {static_track(1, 0, 0, kUnit, "a dog")});
  // IoU 0.62: a TP for the twelve alphas up to 0.6 only.
  const auto pred = video("v", 1, {static_track(2, 0, 0, {0, 0, 10, 6.2}, "a dog")});
  ChotaConfig cfg = exact_config();
  const auto integrated = chota({pred}, {gt}, cfg);
  EXPECT_NEAR(integrated.cap_a, 12.0 / 19.0, 1e-15);
  cfg.cap_alpha.integrate = false;
  cfg.cap_alpha.fixed_alpha = 0.5;
  EXPECT_EQ(chota({pred}, {gt}, cfg).cap_a, 1.0);
  cfg.cap_alpha.fixed_alpha = 0.7;
  EXPECT_EQ(chota({pred}, {gt}, cfg).cap_a, 0.0);
}

TEST(Chota, TruePositivesNonIncreasingInAlpha) {
  SynthConfig sc;
  sc.num_videos = 4;
  sc.box_jitter = 0.2;
  sc.false_positive_rate = 0.1;
  const auto data = generate(sc);
  const auto rep = chota(data.pred, data.gt, ChotaConfig{});
  for (std::size_t k = 1; k < rep.per_alpha.size(); ++k) EXPECT_LE(rep.per_alpha[k].tp, rep.per_alpha[k - 1].tp);
}

TEST(Chota, InvariantToTrackRelabelingAndVideoOrder) {
  SynthConfig sc;
  sc.num_videos = 5;
  sc.box_jitter = 0.15;
  sc.id_switch_rate = 0.3;
  sc.caption_corruption_rate = 0.4;
  const auto data = generate(sc);
  const auto base = chota(data.pred, data.gt, ChotaConfig{});

  auto pred = data.pred, gt = data.gt;
  for (auto& v : pred)
    for (auto& t : v.trajectories) t.track_id = 1000 - t.track_id;
  for (auto& v : gt) {
    std::reverse(v.trajectories.begin(), v.trajectories.end());
    for (auto& t : v.trajectories) t.track_id += 500;
  }
  std::reverse(pred.begin(), pred.end());
  std::rotate(gt.begin(), gt.begin() + 2, gt.end());
  const auto moved = chota(pred, gt, ChotaConfig{});
  EXPECT_NEAR(moved.det_a, base.det_a, 1e-12);
  EXPECT_NEAR(moved.ass_a, base.ass_a, 1e-12);
  EXPECT_NEAR(moved.cap_a, base.cap_a, 1e-12);
  EXPECT_NEAR(moved.chota, base.chota, 1e-12);
}

TEST(Chota, JobsAreBitIdentical) {
  SynthConfig sc;
  sc.num_videos = 12;
  sc.box_jitter = 0.2;
  sc.id_switch_rate = 0.2;
  sc.caption_corruption_rate = 0.3;
  const auto data = generate(sc);
  ChotaConfig one, four;
  four.jobs = 4;
  expect_same_report(chota(data.pred, data.gt, one), chota(data.pred, data.gt, four));
}

TEST(Chota, RejectsBadConfiguration) {
  ChotaConfig cfg;
  cfg.grid.alphas = {0.5, 0.4};
  EXPECT_THROW(chota({}, {}, cfg), InvalidInput);
  cfg = ChotaConfig{};
  cfg.captions.meteor = cfg.captions.cider = false;
  EXPECT_THROW(chota({}, {}, cfg), InvalidInput);
}

TEST(ApM, Examples) {
  const auto gt = video("v", 1, {static_track(1, 0, 0, kUnit, "a dog runs")});
  const auto good = video("v", 1, {static_track(2, 0, 0, {0, 0, 10, 8}, "a dog runs")});
  const auto loose = video("v", 1, {static_track(2, 0, 0, {0, 0, 10, 3.5}, "a dog runs")});
  EXPECT_EQ(ap_m({good}, {gt}).ap_m, 1.0);
  EXPECT_DOUBLE_EQ(ap_m({loose}, {gt}).ap_m, 0.2);
  const auto uncaptioned = video("v", 1, {static_track(1, 0, 0, kUnit)});
  const auto other = video("v", 1, {static_track(2, 0, 0, {0, 0, 10, 8}, "something else entirely")});
  EXPECT_EQ(ap_m({other}, {uncaptioned}).ap_m, 1.0);
  EXPECT_EQ(ap_m({gt}, {gt}).ap_m, 1.0);
}

TEST(ApM, MissingPredictionScoresZero) {
  const auto gt = video("v", 2, {static_track(1, 0, 1, kUnit, "a dog")});
  const auto res = ap_m({}, {gt});
  EXPECT_EQ(res.ap_m, 0.0);
  EXPECT_EQ(res.frames_evaluated, 2u);
  EXPECT_FALSE(res.warnings.empty());
}

TEST(ApM, ReducesToDetectionApWithZeroMeteorThreshold) {
  Rng rng(99);
  const std::vector<double> ious{0.3, 0.4, 0.5, 0.6, 0.7};
  for (int inst = 0; inst < 200; ++inst) {
    const int frames = 3;
    VideoRecord gt = video("v", frames, {}), pred = video("v", frames, {});
    std::vector<std::vector<Box>> gboxes(frames);
    std::vector<std::vector<oracle::ScoredBox>> pboxes(frames);
    int id = 1;
    for (int f = 0; f < frames; ++f) {
      const std::size_t ng = 1 + rng.index(4), np = rng.index(6);
      for (std::size_t g = 0; g < ng; ++g) {
        const double x = rng.uniform(0, 30), y = rng.uniform(0, 30);
        const Box b{x, y, x + rng.uniform(5, 15), y + rng.uniform(5, 15)};
        gboxes[f].push_back(b);
        gt.trajectories.push_back(track(id++, {{f, b}}, "a dog runs"));
      }
      for (std::size_t p = 0; p < np; ++p) {
        const Box& g = gboxes[f][rng.index(gboxes[f].size())];
        const Box b = g.translated(rng.uniform(-4, 4), rng.uniform(-4, 4));
        const double s = std::round(rng.uniform() * 4) / 4;  // coarse scores produce ties
        pboxes[f].push_back({b, s});
        pred.trajectories.push_back(track(id++, {{f, b, s}}, "a cat sleeps"));
      }
    }
    ApmConfig cfg;
    cfg.iou_thresholds = ious;
    cfg.meteor_thresholds = {0.0};
    const auto res = ap_m({pred}, {gt}, cfg);
    double expected = 0.0;
    for (int f = 0; f < frames; ++f) {
      double s = 0.0;
      for (double t : ious) s += oracle::frame_detection_ap(pboxes[f], gboxes[f], t);
      expected += s / static_cast<double>(ious.size());
    }
    expected /= frames;
    ASSERT_NEAR(res.ap_m, expected, 1e-12) << "instance " << inst;
  }
}

TEST(ApM, JobsAreBitIdentical) {
  SynthConfig sc;
  sc.num_videos = 8;
  sc.box_jitter = 0.2;
  sc.caption_corruption_rate = 0.5;
  sc.false_positive_rate = 0.2;
  const auto data = generate(sc);
  ApmConfig four;
  four.jobs = 4;
  const auto a = ap_m(data.pred, data.gt), b = ap_m(data.pred, data.gt, four);
  EXPECT_EQ(a.ap_m, b.ap_m);
  EXPECT_EQ(a.grid, b.grid);
}

TEST(GroundingIous, Examples) {
  FrameBoxes gt(2), pred(2);
  gt[0] = gt[1] = kUnit;
  pred[0] = Box{0, 0, 10, 5};
  pred[1] = kUnit;
  const auto r = grounding_ious(pred, {0, 1}, gt, {0, 1});
  EXPECT_DOUBLE_EQ(r.s_iou, 0.75);
  EXPECT_EQ(r.t_iou, 1.0);
  EXPECT_DOUBLE_EQ(r.v_iou, 0.75);

  FrameBoxes all(10, kUnit), early(10);
  for (int t = 2; t <= 6; ++t) early[t] = kUnit;
  const auto shifted = grounding_ious(early, {2, 6}, all, {4, 8});
  EXPECT_DOUBLE_EQ(shifted.t_iou, 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(shifted.v_iou, 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(shifted.s_iou, 3.0 / 5.0);

  const auto disjoint = grounding_ious(all, {0, 2}, all, {5, 7});
  EXPECT_EQ(disjoint.t_iou, 0.0);
  EXPECT_EQ(disjoint.v_iou, 0.0);
}
