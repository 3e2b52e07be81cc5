#include <gtest/gtest.h>

#include "densevoc/io.hpp"
#include "densevoc/synth.hpp"

using namespace densevoc;
namespace io = densevoc::io;
using nlohmann::json;
using densevoc::synth::SynthConfig;
using densevoc::synth::generate;

namespace {

std::string fixture(const std::string& name) { return std::string(DENSEVOC_FIXTURE_DIR) + "/" + name; }

std::string format_error(const std::string& text, bool strict = false) {
  try {
    io::parse_dataset(io::parse_json(text, "mem.json"), "mem.json", {strict});
  } catch (const io::FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Dataset, RoundTripIsIdentityOnFixtures) {
  for (const char* name : {"synth_seed42_gt.json", "synth_seed42_pred.json", "apm_single_gt.json", "apm_iou08_pred.json",
                           "apm_iou035_pred.json", "apm_captionless_gt.json", "apm_captionless_pred.json",
                           "split_gt.json", "split_pred.json", "untracked.json", "ground_pred.json"}) {
    const auto once = io::load_dataset(fixture(name));
    const json first = io::dataset_json(once);
    const auto twice = io::parse_dataset(json::parse(io::dump(first)), name);
    EXPECT_EQ(io::dataset_json(twice), first) << name;
  }
}

TEST(Dataset, SynthRoundTripKeepsEveryField) {
  SynthConfig cfg;
  cfg.num_videos = 3;
  cfg.box_jitter = 0.1;
  cfg.false_positive_rate = 0.2;
  cfg.caption_corruption_rate = 0.5;
  const auto data = generate(cfg);
  const auto back = io::parse_dataset(json::parse(io::dump(io::dataset_json(data.pred))), "mem");
  ASSERT_EQ(back.size(), data.pred.size());
  for (std::size_t v = 0; v < back.size(); ++v) {
    ASSERT_EQ(back[v].trajectories.size(), data.pred[v].trajectories.size());
    for (std::size_t t = 0; t < back[v].trajectories.size(); ++t) {
      const auto& a = back[v].trajectories[t];
      const auto& b = data.pred[v].trajectories[t];
      EXPECT_EQ(a.track_id, b.track_id);
      EXPECT_EQ(a.caption.has_value(), b.caption.has_value());
      ASSERT_EQ(a.detections.size(), b.detections.size());
      for (std::size_t d = 0; d < a.detections.size(); ++d) {
        EXPECT_EQ(a.detections[d].box, b.detections[d].box);
        EXPECT_EQ(a.detections[d].score, b.detections[d].score);
      }
    }
  }
}

TEST(Dataset, XywhAndObjectWrapper) {
  const auto v = io::load_dataset(fixture("split_pred.json"));
  ASSERT_EQ(v.size(), 1u);
  ASSERT_EQ(v[0].trajectories.size(), 2u);
  EXPECT_EQ(v[0].trajectories[1].detections[0].box, (Box{0, 0, 10, 10}));
}

TEST(Dataset, UntrackedBoxesBecomeSingletonTracks) {
  const auto v = io::load_dataset(fixture("untracked.json")).at(0);
  ASSERT_EQ(v.trajectories.size(), 3u);
  EXPECT_EQ(v.trajectories[0].track_id, 5);
  EXPECT_EQ(v.trajectories[0].detections[1].caption->raw, "a man walks slowly");
  EXPECT_EQ(v.trajectories[1].track_id, 6);
  EXPECT_EQ(v.trajectories[2].track_id, 7);
  EXPECT_EQ(v.trajectories[1].detections.at(0).score, 0.4);
  EXPECT_EQ(v.trajectories[2].detections.at(0).frame, 2);
  EXPECT_EQ(v.trajectories[2].detections.at(0).caption->raw, "a bird");
}

TEST(Dataset, StrictRejectsUnknownFields) {
  const std::string text = R"([{"video_id": "a", "num_frames": 1, "extra": 3, "tracks": []}])";
  EXPECT_TRUE(format_error(text).empty());
  EXPECT_NE(format_error(text, true).find("videos[0]: unknown field 'extra'"), std::string::npos);
}

TEST(Dataset, DiagnosticsNameTheLocation) {
  EXPECT_NE(format_error("[\n {\"video_id\": \"a\",\n  \"num_frames\": }\n]").find("mem.json:3:"), std::string::npos);
  const std::string missing = R"([{"video_id": "a", "num_frames": 2, "tracks": [{"track_id": 1, "boxes": [{"box": [0,0,1,1]}]}]}])";
  EXPECT_NE(format_error(missing).find("videos[0].tracks[0].boxes[0]: missing field 'frame'"), std::string::npos);
  const std::string outside = R"([{"video_id": "a", "num_frames": 2, "tracks": [{"track_id": 1, "boxes": [{"frame": 2, "box": [0,0,1,1]}]}]}])";
  EXPECT_NE(format_error(outside).find("boxes[0].frame: outside"), std::string::npos);
  const std::string score = R"([{"video_id": "a", "num_frames": 1, "tracks": [{"track_id": 1, "boxes": [{"frame": 0, "box": [0,0,1,1], "score": 1.5}]}]}])";
  EXPECT_NE(format_error(score).find("score: must lie in [0,1]"), std::string::npos);
  const std::string dup = R"([{"video_id": "a", "num_frames": 1, "tracks": []}, {"video_id": "a", "num_frames": 1, "tracks": []}])";
  EXPECT_NE(format_error(dup).find("duplicate video_id"), std::string::npos);
  const std::string twice = R"([{"video_id": "a", "num_frames": 2, "tracks": [{"track_id": 1, "boxes": [{"frame": 0, "box": [0,0,1,1]}, {"frame": 0, "box": [0,0,2,2]}]}]}])";
  EXPECT_NE(format_error(twice).find("two boxes in frame 0"), std::string::npos);
  EXPECT_THROW(io::read_file(fixture("does_not_exist.json")), io::FormatError);
}

TEST(Mot, ParsesTrackedAndUntrackedRows) {
  const auto v = io::parse_mot_text(io::read_file(fixture("mot_sample.txt")), "m", "mot_sample.txt");
  EXPECT_EQ(v.num_frames, 3);
  ASSERT_EQ(v.trajectories.size(), 3u);
  EXPECT_EQ(v.trajectories[0].track_id, 3);
  EXPECT_EQ(v.trajectories[0].detections.size(), 2u);
  EXPECT_EQ(v.trajectories[0].detections[1].box, (Box{1, 0, 11, 10}));
  EXPECT_EQ(v.trajectories[1].track_id, 7);
  EXPECT_EQ(v.trajectories[1].detections[0].score, 1.0);
  EXPECT_EQ(v.trajectories[2].track_id, 8);
  EXPECT_EQ(v.trajectories[2].detections[0].score, 0.3);
  EXPECT_THROW(io::parse_mot_text("1,2,0,0,x,1\n", "m", "bad.txt"), io::FormatError);
  EXPECT_THROW(io::parse_mot_text("0,2,0,0,1,1\n", "m", "bad.txt"), io::FormatError);
}

TEST(Matrices, SquareAndRectangular) {
  const auto recs = io::load_matrices(fixture("assoc_four.json"));
  ASSERT_EQ(recs.size(), 1u);
  const auto a = io::to_assoc(recs[0], "assoc_four.json");
  EXPECT_EQ(a.values(0, 2), 0.9);
  EXPECT_EQ(a.frame_of, (std::vector<int>{0, 0, 1, 1}));

  const json rect = {{"dim", {2, 3}}, {"values", {1, 2, 3, 4, 5, 6}}};
  const auto r = io::parse_matrices(rect, "mem").at(0);
  EXPECT_EQ(r.values(1, 0), 4.0);
  EXPECT_EQ(r.frame_of, (std::vector<int>{0, 1}));
  EXPECT_THROW(io::to_assoc(r, "mem"), io::FormatError);
  const json short_values = {{"dim", 2}, {"values", {1, 2, 3}}};
  EXPECT_THROW(io::parse_matrices(short_values, "mem"), io::FormatError);

  const auto echoed = io::parse_matrices(io::matrix_json("x", r.frame_of, r.values, false), "mem").at(0);
  EXPECT_EQ(echoed.values, r.values);
}

TEST(Sidecars, ExternalScores) {
  const auto table = io::parse_external_scores(io::parse_json(io::read_file(fixture("split_external_scores.json")), "s"), "s");
  EXPECT_EQ(table.size(), 4u);
  EXPECT_EQ(table.score({"split", 2, 1}), 0.25);
  const json bad = json::array({{{"video_id", "v"}, {"pred_observation_index", 0}, {"gt_track_id", 1}, {"score", 2.0}}});
  EXPECT_THROW(io::parse_external_scores(bad, "mem"), io::FormatError);
}

TEST(Sidecars, LikelihoodsAndQueries) {
  const auto per_obs = io::parse_likelihoods(io::parse_json(io::read_file(fixture("ground_likelihoods.json")), "l"), "l");
  EXPECT_EQ(per_obs.nll({"g", 1, 3, 2, "q1"}, LikelihoodMode::kPerFrame), 0.2);
  const auto per_track =
      io::parse_likelihoods(io::parse_json(io::read_file(fixture("ground_track_likelihoods.json")), "t"), "t");
  EXPECT_EQ(per_track.nll({"g", 0, 0, 2, "q1"}, LikelihoodMode::kPerTrack), 1.0);
  EXPECT_THROW(per_track.nll({"g", 0, 0, 2, "q1"}, LikelihoodMode::kPerFrame), ScorerError);

  const auto queries = io::parse_queries(io::parse_json(io::read_file(fixture("ground_queries.json")), "q"), "q");
  ASSERT_EQ(queries.size(), 1u);
  EXPECT_EQ(queries[0].span.start, 0);
  EXPECT_EQ(queries[0].span.end, 2);
  EXPECT_EQ(queries[0].caption.tokens.size(), 3u);
  ASSERT_EQ(queries[0].gt_boxes.size(), 3u);
  EXPECT_EQ(*queries[0].gt_boxes[2], (Box{0, 0, 10, 10}));
  const json reversed = json::array({{{"video_id", "g"}, {"query_id", "q"}, {"span", {3, 1}}, {"boxes", json::array()}}});
  EXPECT_THROW(io::parse_queries(reversed, "mem"), io::FormatError);
}

TEST(Reports, JsonCarriesConventionsAndCounts) {
  const auto gt = io::load_dataset(fixture("split_gt.json"));
  const auto pred = io::load_dataset(fixture("split_pred.json"));
  const auto rep = chota(pred, gt, ChotaConfig{});
  const json j = io::report_json(rep);
  EXPECT_EQ(j["AssA"].get<double>(), 0.5);
  EXPECT_TRUE(j["CapA_defined"].get<bool>());
  EXPECT_EQ(j["per_alpha"].size(), 19u);
  EXPECT_EQ(j["per_alpha"][0]["TP"].get<int>(), 4);
  EXPECT_EQ(j["caption_divisor"].get<int>(), 2);
  const auto summary = io::summary_text(io::chota_summary(rep));
  EXPECT_NE(summary.find("AssA=0.5\n"), std::string::npos);
  EXPECT_NE(summary.find("TP_sum=76\n"), std::string::npos);
}
