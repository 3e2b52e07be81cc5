// densevoc command-line front end.
//
// Exit codes: 0 success, 1 a --gate threshold (or a loss check) failed,
// 2 invalid input or usage.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "densevoc/densevoc.hpp"

namespace dv = densevoc;
namespace io = densevoc::io;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGate = 1;
constexpr int kExitInput = 2;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw dv::InvalidInput(what + ": not a number: '" + cell + "'");
    }
  }
  if (out.empty()) throw dv::InvalidInput(what + ": empty list");
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

// "CHOTA>=0.5" style thresholds checked against a flat summary.
bool gates_pass(const std::vector<std::string>& gates, const std::map<std::string, double>& values) {
  bool ok = true;
  for (const auto& g : gates) {
    const auto ge = g.find(">="), le = g.find("<=");
    const auto pos = ge != std::string::npos ? ge : le;
    if (pos == std::string::npos) throw dv::InvalidInput("gate '" + g + "' must look like METRIC>=VALUE");
    const std::string key = g.substr(0, pos);
    auto it = values.find(key);
    if (it == values.end()) throw dv::InvalidInput("gate '" + g + "': unknown metric '" + key + "'");
    const double bound = parse_list(g.substr(pos + 2), "gate")[0];
    const bool pass = ge != std::string::npos ? it->second >= bound : it->second <= bound;
    if (!pass) {
      std::fprintf(stderr, "gate failed: %s (value %s)\n", g.c_str(), io::fmt_double(it->second).c_str());
      ok = false;
    }
  }
  return ok;
}

void emit_summary(const std::vector<std::pair<std::string, std::string>>& kv, const std::string& path) {
  const std::string text = io::summary_text(kv);
  std::cout << text;
  if (!path.empty()) io::write_file(path, text);
}

template <typename Record>
const Record& single_record(const std::vector<Record>& recs, const std::string& what) {
  if (recs.size() != 1) throw dv::InvalidInput(what + ": expected exactly one record, found " + std::to_string(recs.size()));
  return recs.front();
}

// ---------------------------------------------------------------------------

struct EvalChotaArgs {
  std::string gt, pred, alphas = "standard", metrics = "meteor,cider", capa_alpha = "integrate";
  std::string external, out, summary;
  unsigned jobs = 1;
  bool strict = false;
  std::vector<std::string> gates;
};

int run_eval_chota(const EvalChotaArgs& a) {
  const io::ParseOptions opts{a.strict};
  const auto gt = io::load_dataset(a.gt, opts);
  const auto pred = io::load_dataset(a.pred, opts);

  dv::ChotaConfig cfg;
  if (a.alphas != "standard") cfg.grid.alphas = parse_list(a.alphas, "--alphas");
  cfg.captions.meteor = cfg.captions.cider = cfg.captions.exact = false;
  bool want_external = false;
  for (const auto& m : split_words(a.metrics)) {
    if (m == "meteor") cfg.captions.meteor = true;
    else if (m == "cider") cfg.captions.cider = true;
    else if (m == "exact") cfg.captions.exact = true;
    else if (m == "external") want_external = true;
    else throw dv::InvalidInput("--cap-metrics: unknown metric '" + m + "'");
  }
  std::optional<dv::TableExternalScorer> external;
  if (!a.external.empty()) {
    external = io::parse_external_scores(io::parse_json(io::read_file(a.external), a.external), a.external, opts);
    want_external = true;
  }
  if (want_external && !external) throw dv::InvalidInput("--cap-metrics external needs --external-scores");
  if (external) cfg.captions.external = &*external;

  if (a.capa_alpha == "integrate") {
    cfg.cap_alpha.integrate = true;
  } else if (a.capa_alpha.rfind("single:", 0) == 0) {
    cfg.cap_alpha.integrate = false;
    cfg.cap_alpha.fixed_alpha = parse_list(a.capa_alpha.substr(7), "--capa-alpha")[0];
  } else {
    throw dv::InvalidInput("--capa-alpha must be 'integrate' or 'single:<alpha>'");
  }
  cfg.jobs = a.jobs;

  const dv::EvalReport report = dv::chota(pred, gt, cfg);
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!a.out.empty()) io::write_file(a.out, io::dump(io::report_json(report)));
  emit_summary(io::chota_summary(report), a.summary);
  return gates_pass(a.gates, {{"CHOTA", report.chota},
                              {"HOTA", report.hota},
                              {"DetA", report.det_a},
                              {"AssA", report.ass_a},
                              {"CapA", report.cap_a}})
             ? kExitOk
             : kExitGate;
}

struct EvalApmArgs {
  std::string gt, pred, ious, meteors, similarity = "meteor", out, summary;
  unsigned jobs = 1;
  bool strict = false;
  std::vector<std::string> gates;
};

int run_eval_apm(const EvalApmArgs& a) {
  const io::ParseOptions opts{a.strict};
  const auto gt = io::load_dataset(a.gt, opts);
  const auto pred = io::load_dataset(a.pred, opts);
  dv::ApmConfig cfg;
  if (!a.ious.empty()) cfg.iou_thresholds = parse_list(a.ious, "--iou-thresholds");
  if (!a.meteors.empty()) cfg.meteor_thresholds = parse_list(a.meteors, "--meteor-thresholds");
  if (a.similarity == "exact") {
    cfg.similarity = [](const dv::Caption* p, const dv::Caption& g) { return p && p->tokens == g.tokens ? 1.0 : 0.0; };
  } else if (a.similarity != "meteor") {
    throw dv::InvalidInput("--similarity must be 'meteor' or 'exact'");
  }
  cfg.jobs = a.jobs;
  const dv::ApmResult r = dv::ap_m(pred, gt, cfg);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!a.out.empty()) io::write_file(a.out, io::dump(io::apm_json(r, cfg)));
  emit_summary({{"AP_M", io::fmt_double(r.ap_m)}, {"frames", std::to_string(r.frames_evaluated)}}, a.summary);
  return gates_pass(a.gates, {{"AP_M", r.ap_m}}) ? kExitOk : kExitGate;
}

struct CombineArgs {
  std::optional<double> det, ass, cap;
  std::string components;
};

int run_combine(const CombineArgs& a) {
  double det = 0, ass = 0, cap = 0;
  if (!a.components.empty()) {
    const json doc = io::parse_json(io::read_file(a.components), a.components);
    try {
      det = doc.at("DetA").get<double>();
      ass = doc.at("AssA").get<double>();
      cap = doc.at("CapA").get<double>();
    } catch (const json::exception& e) {
      throw io::FormatError(a.components + ": " + e.what());
    }
  }
  if (a.det) det = *a.det;
  if (a.ass) ass = *a.ass;
  if (a.cap) cap = *a.cap;
  if (det < 0 || ass < 0 || cap < 0) throw dv::InvalidInput("components must be non-negative");
  emit_summary({{"CHOTA", io::fmt_double(dv::chota_combine(det, ass, cap))},
                {"HOTA", io::fmt_double(dv::hota_combine(det, ass))}},
               "");
  return kExitOk;
}

int run_track_assign(const std::string& path, double theta, const std::string& out, bool strict) {
  const json doc = io::parse_json(io::read_file(path), path);
  const auto recs = io::parse_matrices(doc, path, {strict});
  json result = json::array();
  for (const auto& r : recs) {
    const auto ids = dv::assign_identities(io::to_assoc(r, path), theta);
    result.push_back(io::identity_json({r.video_id, r.frame_of, ids}));
  }
  if (!doc.is_array()) result = result.at(0);
  const std::string text = io::dump(result);
  if (out.empty()) std::cout << text;
  else io::write_file(out, text);
  return kExitOk;
}

int run_track_iou(const std::string& path, double thresh, const std::string& out, bool strict) {
  auto videos = io::load_dataset(path, {strict});
  for (auto& v : videos) {
    std::vector<std::vector<dv::Detection>> plain(static_cast<std::size_t>(v.num_frames));
    // Trajectory captions become per-detection captions; identities are discarded.
    for (const auto& ref : dv::observation_order(v)) {
      const auto& t = v.trajectories[ref.track_index];
      const auto& d = t.detections[ref.det_index];
      dv::Detection copy = d;
      copy.track_id.reset();
      if (!copy.caption) copy.caption = t.caption;
      plain[static_cast<std::size_t>(d.frame)].push_back(copy);
    }
    const auto ids = dv::iou_tracker(plain, thresh);
    std::vector<dv::Detection> flat;
    std::size_t k = 0;
    for (auto& frame : plain)
      for (auto& d : frame) {
        d.track_id = ids.ids[k++];
        flat.push_back(d);
      }
    v.trajectories = dv::regroup(flat, {});
  }
  const std::string text = io::dump(io::dataset_json(videos));
  if (out.empty()) std::cout << text;
  else io::write_file(out, text);
  return kExitOk;
}

struct AggregateArgs {
  std::string features, assoc, ids, mode = "soft", out;
  int m = 6;
  bool strict = false;
};

int run_aggregate(const AggregateArgs& a) {
  const io::ParseOptions opts{a.strict};
  const auto& feats = single_record(io::load_matrices(a.features, opts), a.features);
  json result;
  if (a.mode == "soft") {
    if (a.assoc.empty()) throw dv::InvalidInput("--mode soft needs --assoc");
    const auto& am = single_record(io::load_matrices(a.assoc, opts), a.assoc);
    const auto out = dv::soft_aggregate(io::to_assoc(am, a.assoc), feats.values);
    result = io::matrix_json(feats.video_id, feats.frame_of, out, false);
  } else if (a.mode == "hard") {
    if (a.ids.empty()) throw dv::InvalidInput("--mode hard needs --ids");
    if (a.m < 1) throw dv::InvalidInput("--m must be >= 1");
    const json doc = io::parse_json(io::read_file(a.ids), a.ids);
    const auto& rec = single_record(io::parse_identities(doc, a.ids, opts), a.ids);
    const auto& frame_of = rec.frame_of.empty() ? feats.frame_of : rec.frame_of;
    const auto out = dv::hard_aggregate(feats.values, rec.ids, frame_of, static_cast<std::size_t>(a.m));
    json tracks = json::array();
    for (const auto& [id, vec] : out) tracks.push_back({{"track_id", id}, {"feature", std::vector<double>(vec.begin(), vec.end())}});
    result = {{"video_id", feats.video_id}, {"m", a.m}, {"tracks", std::move(tracks)}};
  } else {
    throw dv::InvalidInput("--mode must be 'soft' or 'hard'");
  }
  const std::string text = io::dump(result);
  if (a.out.empty()) std::cout << text;
  else io::write_file(a.out, text);
  return kExitOk;
}

struct GroundArgs {
  std::string pred, queries, likelihoods, mode = "per-frame", out, summary;
  bool strict = false;
};

int run_ground(const GroundArgs& a) {
  const io::ParseOptions opts{a.strict};
  const auto pred = io::load_dataset(a.pred, opts);
  const auto queries = io::parse_queries(io::parse_json(io::read_file(a.queries), a.queries), a.queries, opts);
  dv::LikelihoodMode mode;
  if (a.mode == "per-frame") mode = dv::LikelihoodMode::kPerFrame;
  else if (a.mode == "per-track") mode = dv::LikelihoodMode::kPerTrack;
  else throw dv::InvalidInput("--mode must be 'per-frame' or 'per-track'");

  std::optional<dv::TableScorer> table;
  if (!a.likelihoods.empty())
    table = io::parse_likelihoods(io::parse_json(io::read_file(a.likelihoods), a.likelihoods), a.likelihoods, opts);
  const dv::UniformScorer uniform;
  const dv::CaptionScorer& scorer = table ? static_cast<const dv::CaptionScorer&>(*table) : uniform;

  std::map<std::string, const dv::VideoRecord*> by_id;
  for (const auto& v : pred) by_id[v.video_id] = &v;
  json results = json::array();
  double s = 0, t = 0, vi = 0;
  for (const auto& q : queries) {
    auto it = by_id.find(q.video_id);
    if (it == by_id.end()) throw dv::InvalidInput("query '" + q.query_id + "': no prediction video '" + q.video_id + "'");
    const auto outcome = dv::ground_and_score(*it->second, q, scorer, mode);
    json sel = json::array();
    for (std::size_t f = 0; f < outcome.result.selected.size(); ++f)
      if (const auto& choice = outcome.result.selected[f])
        sel.push_back({{"frame", f},
                       {"candidate", choice->index},
                       {"box", {choice->box.x1, choice->box.y1, choice->box.x2, choice->box.y2}}});
    results.push_back({{"video_id", q.video_id},
                       {"query_id", q.query_id},
                       {"selected", std::move(sel)},
                       {"sIoU", outcome.ious.s_iou},
                       {"tIoU", outcome.ious.t_iou},
                       {"vIoU", outcome.ious.v_iou}});
    s += outcome.ious.s_iou;
    t += outcome.ious.t_iou;
    vi += outcome.ious.v_iou;
  }
  const double n = queries.empty() ? 1.0 : static_cast<double>(queries.size());
  if (!a.out.empty()) io::write_file(a.out, io::dump({{"mode", a.mode}, {"queries", results}}));
  emit_summary({{"queries", std::to_string(queries.size())},
                {"sIoU", io::fmt_double(s / n)},
                {"tIoU", io::fmt_double(t / n)},
                {"vIoU", io::fmt_double(vi / n)}},
               a.summary);
  return kExitOk;
}

int run_synth(const dv::synth::SynthConfig& cfg, const std::string& out_gt, const std::string& out_pred) {
  const auto pair = dv::synth::generate(cfg);
  io::save_dataset(out_gt, pair.gt);
  io::save_dataset(out_pred, pair.pred);
  std::size_t gt_dets = 0, pred_dets = 0;
  for (const auto& v : pair.gt) gt_dets += v.num_detections();
  for (const auto& v : pair.pred) pred_dets += v.num_detections();
  emit_summary({{"videos", std::to_string(pair.gt.size())},
                {"gt_detections", std::to_string(gt_dets)},
                {"pred_detections", std::to_string(pred_dets)}},
               "");
  return kExitOk;
}

int run_verify_losses(int seeds, double tolerance) {
  const auto rows = dv::losses::run_gradient_checks(seeds, tolerance);
  bool ok = true;
  std::printf("%-10s %6s %14s %s\n", "loss", "seeds", "max_rel_err", "result");
  for (const auto& r : rows) {
    std::printf("%-10s %6d %14.3e %s\n", r.loss.c_str(), r.seeds, r.max_rel_error, r.passed ? "PASS" : "FAIL");
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitGate;
}

int run_convert(const std::string& input, const std::string& video_id, int num_frames, const std::string& out) {
  const auto v = io::parse_mot_text(io::read_file(input), video_id, input, num_frames);
  const std::string text = io::dump(io::dataset_json({v}));
  if (out.empty()) std::cout << text;
  else io::write_file(out, text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense video object captioning metrics and tracking utilities"};
  app.require_subcommand(1);

  unsigned default_jobs = 1;
  if (const char* env = std::getenv("DENSEVOC_JOBS")) {
    try {
      default_jobs = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: DENSEVOC_JOBS is not a number: '%s'\n", env);
      return kExitInput;
    }
  }

  EvalChotaArgs chota_args;
  chota_args.jobs = default_jobs;
  auto* chota = app.add_subcommand("eval-chota", "CHOTA, HOTA, DetA, AssA and CapA");
  chota->add_option("gt", chota_args.gt, "Ground-truth dataset")->required();
  chota->add_option("pred", chota_args.pred, "Prediction dataset")->required();
  chota->add_option("--alphas", chota_args.alphas, "Comma-separated thresholds or 'standard'");
  chota->add_option("--cap-metrics", chota_args.metrics, "Comma list of meteor,cider,exact,external");
  chota->add_option("--capa-alpha", chota_args.capa_alpha, "'integrate' or 'single:<alpha>'");
  chota->add_option("--external-scores", chota_args.external, "External caption score sidecar");
  chota->add_option("--out", chota_args.out, "Full JSON report");
  chota->add_option("--summary", chota_args.summary, "key=value summary file");
  chota->add_option("--jobs", chota_args.jobs, "Worker threads (default DENSEVOC_JOBS or 1)");
  chota->add_option("--gate", chota_args.gates, "Threshold such as CHOTA>=0.5; exit 1 when violated");
  chota->add_flag("--strict", chota_args.strict, "Reject unknown fields");

  EvalApmArgs apm_args;
  apm_args.jobs = default_jobs;
  auto* apm = app.add_subcommand("eval-apm", "Frame mAP-METEOR");
  apm->add_option("gt", apm_args.gt, "Ground-truth dataset")->required();
  apm->add_option("pred", apm_args.pred, "Prediction dataset")->required();
  apm->add_option("--iou-thresholds", apm_args.ious, "Comma-separated IoU thresholds");
  apm->add_option("--meteor-thresholds", apm_args.meteors, "Comma-separated METEOR thresholds");
  apm->add_option("--similarity", apm_args.similarity, "'meteor' or 'exact'");
  apm->add_option("--out", apm_args.out, "Full JSON report");
  apm->add_option("--summary", apm_args.summary, "key=value summary file");
  apm->add_option("--jobs", apm_args.jobs, "Worker threads");
  apm->add_option("--gate", apm_args.gates, "Threshold such as AP_M>=0.3");
  apm->add_flag("--strict", apm_args.strict, "Reject unknown fields");

  CombineArgs combine_args;
  auto* combine = app.add_subcommand("combine", "CHOTA from DetA, AssA and CapA");
  combine->add_option("--components", combine_args.components, "JSON with DetA, AssA, CapA");
  combine->add_option("--det", combine_args.det);
  combine->add_option("--ass", combine_args.ass);
  combine->add_option("--cap", combine_args.cap);

  std::string assign_in, assign_out;
  double theta = 0.5;
  bool assign_strict = false;
  auto* assign = app.add_subcommand("track-assign", "Greedy identities from association matrices");
  assign->add_option("matrix", assign_in, "Association matrix file")->required();
  assign->add_option("--theta", theta, "Binarization threshold in (0,1)");
  assign->add_option("--out", assign_out, "Identity file (stdout when omitted)");
  assign->add_flag("--strict", assign_strict);

  std::string iou_in, iou_out;
  double iou_thresh = 0.5;
  bool iou_strict = false;
  auto* track_iou = app.add_subcommand("track-iou", "IoU tracker baseline");
  track_iou->add_option("pred", iou_in, "Dataset whose detections are re-linked")->required();
  track_iou->add_option("--thresh", iou_thresh, "Minimum IoU to continue a track");
  track_iou->add_option("--out", iou_out, "Output dataset (stdout when omitted)");
  track_iou->add_flag("--strict", iou_strict);

  AggregateArgs agg_args;
  auto* agg = app.add_subcommand("aggregate", "Trajectory feature aggregation");
  agg->add_option("features", agg_args.features, "Feature matrix file, dim [M, D]")->required();
  agg->add_option("--assoc", agg_args.assoc, "Association matrix (soft mode)");
  agg->add_option("--ids", agg_args.ids, "Identity file (hard mode)");
  agg->add_option("--mode", agg_args.mode, "'soft' or 'hard'");
  agg->add_option("--m", agg_args.m, "Frames sampled per track in hard mode");
  agg->add_option("--out", agg_args.out, "Output file (stdout when omitted)");
  agg->add_flag("--strict", agg_args.strict);

  GroundArgs ground_args;
  auto* ground = app.add_subcommand("ground", "Likelihood-based spatial grounding");
  ground->add_option("pred", ground_args.pred, "Prediction dataset supplying proposals")->required();
  ground->add_option("--queries", ground_args.queries, "Query file")->required();
  ground->add_option("--likelihoods", ground_args.likelihoods, "Likelihood table (uniform when omitted)");
  ground->add_option("--mode", ground_args.mode, "'per-frame' or 'per-track'");
  ground->add_option("--out", ground_args.out, "Grounding result file");
  ground->add_option("--summary", ground_args.summary, "key=value summary file");
  ground->add_flag("--strict", ground_args.strict);

  dv::synth::SynthConfig synth_cfg;
  std::string out_gt, out_pred;
  auto* synth = app.add_subcommand("synth", "Seeded synthetic ground truth and predictions");
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--videos", synth_cfg.num_videos);
  synth->add_option("--frames", synth_cfg.frames_per_video);
  synth->add_option("--objects", synth_cfg.objects_per_video);
  synth->add_option("--caption-fraction", synth_cfg.caption_fraction);
  synth->add_option("--jitter", synth_cfg.box_jitter, "Corner noise std-dev relative to box size");
  synth->add_option("--drop-rate", synth_cfg.drop_rate);
  synth->add_option("--fp-rate", synth_cfg.false_positive_rate);
  synth->add_option("--id-switch-rate", synth_cfg.id_switch_rate);
  synth->add_option("--caption-corruption-rate", synth_cfg.caption_corruption_rate);
  synth->add_option("--out-gt", out_gt)->required();
  synth->add_option("--out-pred", out_pred)->required();

  int loss_seeds = 100;
  double loss_tol = 1e-4;
  auto* verify = app.add_subcommand("verify-losses", "Finite-difference check of every loss gradient");
  verify->add_option("--seeds", loss_seeds);
  verify->add_option("--tolerance", loss_tol);

  std::string conv_in, conv_out, conv_id = "video";
  int conv_frames = 0;
  auto* convert = app.add_subcommand("convert", "Flat frame,id,x,y,w,h,score text to a dataset");
  convert->add_option("input", conv_in)->required();
  convert->add_option("--video-id", conv_id);
  convert->add_option("--num-frames", conv_frames);
  convert->add_option("--out", conv_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*chota) return run_eval_chota(chota_args);
    if (*apm) return run_eval_apm(apm_args);
    if (*combine) return run_combine(combine_args);
    if (*assign) return run_track_assign(assign_in, theta, assign_out, assign_strict);
    if (*track_iou) return run_track_iou(iou_in, iou_thresh, iou_out, iou_strict);
    if (*agg) return run_aggregate(agg_args);
    if (*ground) return run_ground(ground_args);
    if (*synth) return run_synth(synth_cfg, out_gt, out_pred);
    if (*verify) return run_verify_losses(loss_seeds, loss_tol);
    if (*convert) return run_convert(conv_in, conv_id, conv_frames, conv_out);
  } catch (const io::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const dv::InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const dv::ScorerError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const dv::ExternalScoreError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
