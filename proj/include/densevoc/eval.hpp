// Captioned HOTA (DetA, AssA, CapA integrated over localization thresholds),
// frame mAP-METEOR and grounding IoUs.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "densevoc/capmetrics.hpp"
#include "densevoc/core.hpp"
#include "densevoc/hungarian.hpp"
#include "densevoc/parallel.hpp"

namespace densevoc {

/// Localization thresholds, strictly increasing inside (0,1).
struct AlphaGrid {
  std::vector<double> alphas;

  static AlphaGrid standard() {
    AlphaGrid g;
    for (int k = 1; k <= 19; ++k) g.alphas.push_back(0.05 * k);
    return g;
  }

  void validate() const {
    if (alphas.empty()) throw InvalidInput("alpha grid is empty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw InvalidInput("alpha outside (0,1)");
      if (i && alphas[i] <= alphas[i - 1]) throw InvalidInput("alpha grid must be strictly increasing");
    }
  }
};

// ---------------------------------------------------------------------------
// Matching

struct MatchedPair {
  int frame = 0;
  int pred_index = 0;  // position within the frame's prediction list
  int gt_index = 0;    // position within the frame's ground-truth list
  int pred_track = 0;
  int gt_track = 0;
  std::size_t pred_observation = 0;  // canonical observation index in the prediction video
  double iou = 0.0;
};

struct FrameSlot {
  int frame = 0;
  int index = 0;
};

/// Bijective per-frame matching at one localization threshold.
struct MatchSet {
  double alpha = 0.0;
  std::vector<MatchedPair> tp;
  std::vector<FrameSlot> fp;
  std::vector<FrameSlot> fn;
  std::map<int, int> pred_track_size;  // detections per prediction track
  std::map<int, int> gt_track_size;
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// One observation as seen by the matcher.
struct ObsView {
  const Detection* det = nullptr;
  const Trajectory* traj = nullptr;
  int track_col = 0;  // dense index of the owning track
};

/// Per-frame observation views in canonical order.
inline std::vector<std::vector<ObsView>> frame_views(const VideoRecord& v, int num_frames) {
  std::vector<std::vector<ObsView>> out(static_cast<std::size_t>(std::max(num_frames, 0)));
  for (const auto& ref : observation_order(v)) {
    if (ref.frame < 0 || ref.frame >= num_frames) continue;
    const Trajectory& t = v.trajectories[ref.track_index];
    out[static_cast<std::size_t>(ref.frame)].push_back(
        {&t.detections[ref.det_index], &t, static_cast<int>(ref.track_index)});
  }
  return out;
}

/// Threshold-independent half of the HOTA matching for one video: per frame,
/// the assignment maximizing (estimated track alignment) x IoU.
struct VideoMatching {
  std::vector<std::vector<ObsView>> pred_frames;
  std::vector<std::vector<ObsView>> gt_frames;
  std::vector<MatchedPair> candidates;  // assigned pairs with IoU > 0
  std::vector<int> candidate_pair;      // dense (gt track, pred track) index per candidate
  std::size_t num_track_pairs = 0;
  std::vector<int> pair_gt_size, pair_pred_size;
  std::size_t num_pred = 0, num_gt = 0;
  std::map<int, int> pred_track_size;
  std::map<int, int> gt_track_size;
};

inline VideoMatching match_video(const VideoRecord& pred, const VideoRecord& gt) {
  VideoMatching vm;
  const int num_frames = std::max(pred.num_frames, gt.num_frames);
  vm.pred_frames = frame_views(pred, num_frames);
  vm.gt_frames = frame_views(gt, num_frames);
  const std::size_t ng = gt.trajectories.size(), np = pred.trajectories.size();
  for (const auto& t : gt.trajectories) {
    vm.gt_track_size[t.track_id] = static_cast<int>(t.detections.size());
    vm.num_gt += t.detections.size();
  }
  for (const auto& t : pred.trajectories) {
    vm.pred_track_size[t.track_id] = static_cast<int>(t.detections.size());
    vm.num_pred += t.detections.size();
  }

  // Pass 1: soft co-occurrence of every gt/pred track pair.
  Eigen::MatrixXd potential = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ng), static_cast<Eigen::Index>(np));
  std::vector<Eigen::MatrixXd> sims(static_cast<std::size_t>(num_frames));
  for (std::size_t t = 0; t < sims.size(); ++t) {
    const auto& gts = vm.gt_frames[t];
    const auto& preds = vm.pred_frames[t];
    Eigen::MatrixXd& sim = sims[t];
    sim.resize(static_cast<Eigen::Index>(gts.size()), static_cast<Eigen::Index>(preds.size()));
    for (std::size_t g = 0; g < gts.size(); ++g)
      for (std::size_t p = 0; p < preds.size(); ++p)
        sim(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(p)) = iou(gts[g].det->box, preds[p].det->box);
    if (sim.size() == 0) continue;
    const Eigen::VectorXd gt_sum = sim.rowwise().sum();
    const Eigen::RowVectorXd pred_sum = sim.colwise().sum();
    for (Eigen::Index g = 0; g < sim.rows(); ++g)
      for (Eigen::Index p = 0; p < sim.cols(); ++p) {
        const double denom = gt_sum(g) + pred_sum(p) - sim(g, p);
        if (denom > kEps)
          potential(gts[static_cast<std::size_t>(g)].track_col, preds[static_cast<std::size_t>(p)].track_col) +=
              sim(g, p) / denom;
      }
  }
  Eigen::MatrixXd alignment = Eigen::MatrixXd::Zero(potential.rows(), potential.cols());
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t p = 0; p < np; ++p) {
      const auto gi = static_cast<Eigen::Index>(g), pi = static_cast<Eigen::Index>(p);
      const double num = potential(gi, pi);
      const double den = static_cast<double>(gt.trajectories[g].detections.size() +
                                             pred.trajectories[p].detections.size()) - num;
      if (den > 0.0) alignment(gi, pi) = num / den;
    }

  // Pass 2: per-frame assignment on alignment x IoU.
  std::vector<int> pair_index(ng * np, -1);
  std::size_t offset = 0;
  for (std::size_t t = 0; t < sims.size(); ++t) {
    const auto& gts = vm.gt_frames[t];
    const auto& preds = vm.pred_frames[t];
    const std::size_t frame_offset = offset;
    offset += preds.size();
    const Eigen::MatrixXd& sim = sims[t];
    if (sim.size() == 0) continue;
    Eigen::MatrixXd cost(sim.rows(), sim.cols());
    for (Eigen::Index g = 0; g < sim.rows(); ++g)
      for (Eigen::Index p = 0; p < sim.cols(); ++p)
        cost(g, p) = -alignment(gts[static_cast<std::size_t>(g)].track_col, preds[static_cast<std::size_t>(p)].track_col) *
                     sim(g, p);
    for (const auto& [g, p] : solve_min_cost(cost)) {
      if (!(sim(g, p) > 0.0)) continue;
      const ObsView& gv = gts[static_cast<std::size_t>(g)];
      const ObsView& pv = preds[static_cast<std::size_t>(p)];
      MatchedPair mp;
      mp.frame = static_cast<int>(t);
      mp.gt_index = g;
      mp.pred_index = p;
      mp.gt_track = gv.traj->track_id;
      mp.pred_track = pv.traj->track_id;
      mp.pred_observation = frame_offset + static_cast<std::size_t>(p);
      mp.iou = sim(g, p);
      vm.candidates.push_back(mp);
      int& slot = pair_index[static_cast<std::size_t>(gv.track_col) * np + static_cast<std::size_t>(pv.track_col)];
      if (slot < 0) {
        slot = static_cast<int>(vm.num_track_pairs++);
        vm.pair_gt_size.push_back(static_cast<int>(gv.traj->detections.size()));
        vm.pair_pred_size.push_back(static_cast<int>(pv.traj->detections.size()));
      }
      vm.candidate_pair.push_back(slot);
    }
  }
  return vm;
}

inline bool clears(double iou_value, double alpha) { return iou_value >= alpha - kEps; }

inline MatchSet filter_matches(const VideoMatching& vm, double alpha) {
  MatchSet ms;
  ms.alpha = alpha;
  ms.pred_track_size = vm.pred_track_size;
  ms.gt_track_size = vm.gt_track_size;
  std::vector<std::vector<char>> pred_hit(vm.pred_frames.size()), gt_hit(vm.gt_frames.size());
  for (std::size_t t = 0; t < vm.pred_frames.size(); ++t) {
    pred_hit[t].assign(vm.pred_frames[t].size(), 0);
    gt_hit[t].assign(vm.gt_frames[t].size(), 0);
  }
  for (const auto& mp : vm.candidates) {
    if (!clears(mp.iou, alpha)) continue;
    ms.tp.push_back(mp);
    pred_hit[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.pred_index)] = 1;
    gt_hit[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.gt_index)] = 1;
  }
  for (std::size_t t = 0; t < pred_hit.size(); ++t) {
    for (std::size_t i = 0; i < pred_hit[t].size(); ++i)
      if (!pred_hit[t][i]) ms.fp.push_back({static_cast<int>(t), static_cast<int>(i)});
    for (std::size_t i = 0; i < gt_hit[t].size(); ++i)
      if (!gt_hit[t][i]) ms.fn.push_back({static_cast<int>(t), static_cast<int>(i)});
  }
  return ms;
}

}  // namespace detail

/// HOTA matching at threshold `alpha`. Track pairs are first scored by their
/// soft alignment over the whole video; each frame is then assigned by
/// maximizing alignment x IoU, and assigned pairs with IoU below alpha are
/// discarded.
inline MatchSet match_at_alpha(const VideoRecord& pred, const VideoRecord& gt, double alpha) {
  if (pred.video_id != gt.video_id)
    throw InvalidInput("match_at_alpha: video ids differ ('" + pred.video_id + "' vs '" + gt.video_id + "')");
  return detail::filter_matches(detail::match_video(pred, gt), alpha);
}

inline double det_a(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

inline double det_a(const MatchSet& m) { return det_a(m.tp.size(), m.fp.size(), m.fn.size()); }

/// Numerator of AssA: sum over TP of the Ass-IoU of the track pair owning it.
/// Contributions are summed in sorted order so the value does not depend on
/// track labels.
inline double ass_a_numerator(const MatchSet& m) {
  std::map<std::pair<int, int>, int> pair_tp;
  for (const auto& mp : m.tp) ++pair_tp[{mp.gt_track, mp.pred_track}];
  std::vector<double> terms;
  terms.reserve(pair_tp.size());
  for (const auto& [key, tpa] : pair_tp) {
    const int gsize = m.gt_track_size.at(key.first);
    const int psize = m.pred_track_size.at(key.second);
    terms.push_back(static_cast<double>(tpa) * tpa / static_cast<double>(gsize + psize - tpa));
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double v : terms) sum += v;
  return sum;
}

/// Association accuracy; 1 when there are no true positives.
inline double ass_a(const MatchSet& m) {
  if (m.tp.empty()) return 1.0;
  return ass_a_numerator(m) / static_cast<double>(m.tp.size());
}

// ---------------------------------------------------------------------------
// Caption accuracy

/// Caption a prediction is judged by: its own if present, else its track's.
inline const Caption* effective_caption(const Detection& d, const Trajectory& t) {
  if (d.caption) return &*d.caption;
  if (t.caption) return &*t.caption;
  return nullptr;
}

/// Scores matched pairs, caching the non-external part per caption pair.
class PairScorer {
 public:
  PairScorer(const IdfTable& idf, const CaptionMetricConfig& cfg) : idf_(idf), cfg_(cfg) {}

  double operator()(const Caption* pred, const Caption& gt, const PairKey& key) {
    static const Caption kEmpty{};
    const Caption& p = pred ? *pred : kEmpty;
    auto [it, inserted] = cache_.try_emplace({&p, &gt}, 0.0);
    if (inserted) {
      CaptionMetricConfig local = cfg_;
      local.external = nullptr;
      const CaptionScore s = score_pair(p, gt, idf_, local);
      double sum = 0.0;
      for (const auto& v : {s.meteor, s.cider, s.exact})
        if (v) sum += *v;
      it->second = sum;
    }
    double sum = it->second;
    if (cfg_.external) sum += cfg_.external->score(key);
    const int div = cfg_.divisor();
    return div ? sum / div : 0.0;
  }

 private:
  struct PtrPairHash {
    std::size_t operator()(const std::pair<const Caption*, const Caption*>& k) const {
      return std::hash<const void*>()(k.first) * 31u ^ std::hash<const void*>()(k.second);
    }
  };
  const IdfTable& idf_;
  CaptionMetricConfig cfg_;
  std::unordered_map<std::pair<const Caption*, const Caption*>, double, PtrPairHash> cache_;
};

struct CapSums {
  std::size_t tp_prime = 0;  // TP pairs whose gt track is captioned
  double score_sum = 0.0;
};

namespace detail {

/// Caption score of every candidate pair whose gt track is captioned (NaN
/// otherwise). Threshold-independent.
inline std::vector<double> candidate_caption_scores(const VideoMatching& vm, const std::string& video_id,
                                                    PairScorer& scorer) {
  std::vector<double> out(vm.candidates.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < vm.candidates.size(); ++k) {
    const MatchedPair& mp = vm.candidates[k];
    const ObsView& gv = vm.gt_frames[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.gt_index)];
    if (!gv.traj->caption) continue;
    const ObsView& pv = vm.pred_frames[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.pred_index)];
    out[k] = scorer(effective_caption(*pv.det, *pv.traj), *gv.traj->caption,
                    PairKey{video_id, mp.pred_observation, mp.gt_track});
  }
  return out;
}

inline CapSums cap_sums_at(const VideoMatching& vm, const std::vector<double>& scores, double alpha) {
  CapSums out;
  for (std::size_t k = 0; k < vm.candidates.size(); ++k) {
    if (std::isnan(scores[k]) || !clears(vm.candidates[k].iou, alpha)) continue;
    ++out.tp_prime;
    out.score_sum += scores[k];
  }
  return out;
}

}  // namespace detail

/// CapA over the TP pairs of `m` whose ground-truth track carries a caption.
/// Returns 0 when no such pair exists.
inline double cap_a(const MatchSet& m, const VideoRecord& pred, const VideoRecord& gt, const IdfTable& idf,
                    const CaptionMetricConfig& cfg) {
  PairScorer scorer(idf, cfg);
  const int num_frames = std::max(pred.num_frames, gt.num_frames);
  const auto pred_frames = detail::frame_views(pred, num_frames);
  const auto gt_frames = detail::frame_views(gt, num_frames);
  CapSums s;
  for (const auto& mp : m.tp) {
    const auto& gv = gt_frames[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.gt_index)];
    if (!gv.traj->caption) continue;
    const auto& pv = pred_frames[static_cast<std::size_t>(mp.frame)][static_cast<std::size_t>(mp.pred_index)];
    ++s.tp_prime;
    s.score_sum += scorer(effective_caption(*pv.det, *pv.traj), *gv.traj->caption,
                          PairKey{gt.video_id, mp.pred_observation, mp.gt_track});
  }
  return s.tp_prime ? s.score_sum / static_cast<double>(s.tp_prime) : 0.0;
}

// ---------------------------------------------------------------------------
// CHOTA

inline double chota_combine(double det, double ass, double cap) { return std::cbrt(det * ass * cap); }
inline double hota_combine(double det, double ass) { return std::sqrt(det * ass); }

/// How CapA treats the localization threshold.
struct CapAlphaMode {
  bool integrate = true;     // average CapA over the alpha grid
  double fixed_alpha = 0.5;  // used when integrate is false
};

struct ChotaConfig {
  AlphaGrid grid = AlphaGrid::standard();
  CaptionMetricConfig captions;
  CapAlphaMode cap_alpha;
  unsigned jobs = 1;
};

/// Pooled counts for one threshold.
struct AlphaCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double ass_numerator = 0.0;
  CapSums cap;
};

struct AlphaRow {
  double alpha = 0.0;
  double det_a = 0.0, ass_a = 0.0, cap_a = 0.0, hota = 0.0, chota = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tp_prime = 0;
};

struct VideoSummary {
  std::string video_id;
  double det_a = 0.0, ass_a = 0.0, cap_a = 0.0, hota = 0.0, chota = 0.0;
  bool cap_a_defined = false;
  bool prediction_missing = false;
};

struct EvalReport {
  std::vector<AlphaRow> per_alpha;
  double det_a = 0.0, ass_a = 0.0, cap_a = 0.0, hota = 0.0, chota = 0.0;
  bool ass_a_defined = true;  // false when some alpha had no TP (reported as 1)
  bool cap_a_defined = true;  // false when no ground-truth captions exist (CHOTA := HOTA)
  std::vector<std::string> caption_metrics;
  int caption_divisor = 0;
  std::string cap_alpha_mode;
  std::vector<VideoSummary> per_video;
  std::vector<std::string> warnings;
};

namespace detail {

struct VideoCounts {
  std::vector<AlphaCounts> per_alpha;
  CapSums cap_fixed;
  bool has_captions = false;
};

inline VideoCounts evaluate_video(const VideoRecord& pred, const VideoRecord& gt, const ChotaConfig& cfg,
                                  const IdfTable& idf) {
  VideoCounts vc;
  for (const auto& t : gt.trajectories)
    if (t.caption) vc.has_captions = true;
  const VideoMatching vm = match_video(pred, gt);
  std::vector<double> cap_scores;
  if (vc.has_captions) {
    PairScorer scorer(idf, cfg.captions);
    cap_scores = candidate_caption_scores(vm, gt.video_id, scorer);
  }
  std::vector<int> pair_tp(vm.num_track_pairs);
  std::vector<double> terms;
  for (double alpha : cfg.grid.alphas) {
    AlphaCounts ac;
    std::fill(pair_tp.begin(), pair_tp.end(), 0);
    for (std::size_t k = 0; k < vm.candidates.size(); ++k) {
      if (!clears(vm.candidates[k].iou, alpha)) continue;
      ++ac.tp;
      ++pair_tp[static_cast<std::size_t>(vm.candidate_pair[k])];
    }
    ac.fp = vm.num_pred - ac.tp;
    ac.fn = vm.num_gt - ac.tp;
    terms.clear();
    for (std::size_t q = 0; q < pair_tp.size(); ++q)
      if (pair_tp[q] > 0) {
        const double tpa = pair_tp[q];
        terms.push_back(tpa * tpa / (vm.pair_gt_size[q] + vm.pair_pred_size[q] - tpa));
      }
    std::sort(terms.begin(), terms.end());
    for (double v : terms) ac.ass_numerator += v;
    if (cfg.cap_alpha.integrate && vc.has_captions) ac.cap = cap_sums_at(vm, cap_scores, alpha);
    vc.per_alpha.push_back(ac);
  }
  if (!cfg.cap_alpha.integrate && vc.has_captions) vc.cap_fixed = cap_sums_at(vm, cap_scores, cfg.cap_alpha.fixed_alpha);
  return vc;
}

inline AlphaRow alpha_row(double alpha, const AlphaCounts& c, const CapSums& cap, bool captions_exist) {
  AlphaRow r;
  r.alpha = alpha;
  r.tp = c.tp;
  r.fp = c.fp;
  r.fn = c.fn;
  r.tp_prime = cap.tp_prime;
  r.det_a = det_a(c.tp, c.fp, c.fn);
  r.ass_a = c.tp ? c.ass_numerator / static_cast<double>(c.tp) : 1.0;
  r.cap_a = cap.tp_prime ? cap.score_sum / static_cast<double>(cap.tp_prime) : 0.0;
  r.hota = hota_combine(r.det_a, r.ass_a);
  r.chota = captions_exist ? chota_combine(r.det_a, r.ass_a, r.cap_a) : r.hota;
  return r;
}

/// Fills aggregate fields from pooled per-alpha counts.
template <typename Target>
void summarize(Target& out, const std::vector<double>& alphas, const std::vector<AlphaCounts>& counts,
               const CapSums& cap_fixed, const CapAlphaMode& mode, bool captions_exist,
               std::vector<AlphaRow>* rows) {
  double det = 0.0, ass = 0.0, cap = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const CapSums& cs = mode.integrate ? counts[k].cap : cap_fixed;
    const AlphaRow r = alpha_row(alphas[k], counts[k], cs, captions_exist);
    det += r.det_a;
    ass += r.ass_a;
    cap += r.cap_a;
    if (rows) rows->push_back(r);
  }
  const double n = static_cast<double>(alphas.size());
  out.det_a = det / n;
  out.ass_a = ass / n;
  out.cap_a = captions_exist ? cap / n : 0.0;
  out.hota = hota_combine(out.det_a, out.ass_a);
  out.chota = captions_exist ? chota_combine(out.det_a, out.ass_a, out.cap_a) : out.hota;
}

}  // namespace detail

/// Builds the CIDEr document-frequency table from all ground-truth captions.
inline IdfTable build_idf(const std::vector<VideoRecord>& gt) {
  IdfTable idf;
  for (const auto& v : gt)
    for (const auto& t : v.trajectories)
      if (t.caption) idf.add_document(*t.caption);
  return idf;
}

/// CHOTA over a set of videos. Counts are pooled across videos per alpha
/// (micro average); aggregates are means over the alpha grid, and
/// CHOTA = cbrt(DetA * AssA * CapA) of those means.
inline EvalReport chota(const std::vector<VideoRecord>& pred, const std::vector<VideoRecord>& gt,
                        const ChotaConfig& cfg, const IdfTable* idf_override = nullptr) {
  cfg.grid.validate();
  if (!cfg.cap_alpha.integrate && !(cfg.cap_alpha.fixed_alpha > 0.0 && cfg.cap_alpha.fixed_alpha < 1.0))
    throw InvalidInput("fixed CapA alpha must lie in (0,1)");
  EvalReport report;
  report.caption_metrics = cfg.captions.enabled();
  report.caption_divisor = cfg.captions.divisor();
  report.cap_alpha_mode = cfg.cap_alpha.integrate ? std::string("integrate")
                                                  : "single:" + std::to_string(cfg.cap_alpha.fixed_alpha);
  if (report.caption_divisor == 0) throw InvalidInput("no caption sub-metric enabled");

  const IdfTable idf_local = idf_override ? IdfTable{} : build_idf(gt);
  const IdfTable& idf = idf_override ? *idf_override : idf_local;

  // Videos are processed in video_id order so results do not depend on input order.
  std::vector<const VideoRecord*> gts;
  for (const auto& v : gt) gts.push_back(&v);
  std::sort(gts.begin(), gts.end(), [](auto* a, auto* b) { return a->video_id < b->video_id; });
  for (std::size_t i = 1; i < gts.size(); ++i)
    if (gts[i]->video_id == gts[i - 1]->video_id) throw InvalidInput("duplicate gt video '" + gts[i]->video_id + "'");
  std::map<std::string, const VideoRecord*> pred_by_id;
  for (const auto& v : pred) {
    if (!pred_by_id.emplace(v.video_id, &v).second)
      throw InvalidInput("duplicate prediction video '" + v.video_id + "'");
  }
  for (const auto& [id, v] : pred_by_id) {
    const bool known = std::any_of(gts.begin(), gts.end(), [&](auto* g) { return g->video_id == id; });
    if (!known) report.warnings.push_back("prediction video '" + id + "' has no ground truth; ignored");
  }

  std::vector<VideoRecord> empty_preds(gts.size());
  std::vector<const VideoRecord*> preds(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    auto it = pred_by_id.find(gts[i]->video_id);
    if (it == pred_by_id.end()) {
      empty_preds[i].video_id = gts[i]->video_id;
      empty_preds[i].num_frames = gts[i]->num_frames;
      preds[i] = &empty_preds[i];
      report.warnings.push_back("video '" + gts[i]->video_id + "' missing from predictions; counted as all FN");
    } else {
      preds[i] = it->second;
    }
  }

  std::vector<detail::VideoCounts> counts(gts.size());
  parallel_for(gts.size(), cfg.jobs,
               [&](std::size_t i) { counts[i] = detail::evaluate_video(*preds[i], *gts[i], cfg, idf); });

  const std::size_t na = cfg.grid.alphas.size();
  std::vector<AlphaCounts> pooled(na);
  CapSums pooled_fixed;
  bool captions_exist = false;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto& vc = counts[i];
    captions_exist = captions_exist || vc.has_captions;
    for (std::size_t k = 0; k < na; ++k) {
      pooled[k].tp += vc.per_alpha[k].tp;
      pooled[k].fp += vc.per_alpha[k].fp;
      pooled[k].fn += vc.per_alpha[k].fn;
      pooled[k].ass_numerator += vc.per_alpha[k].ass_numerator;
      pooled[k].cap.tp_prime += vc.per_alpha[k].cap.tp_prime;
      pooled[k].cap.score_sum += vc.per_alpha[k].cap.score_sum;
    }
    pooled_fixed.tp_prime += vc.cap_fixed.tp_prime;
    pooled_fixed.score_sum += vc.cap_fixed.score_sum;

    VideoSummary vs;
    vs.video_id = gts[i]->video_id;
    vs.prediction_missing = preds[i] == &empty_preds[i];
    vs.cap_a_defined = vc.has_captions;
    detail::summarize(vs, cfg.grid.alphas, vc.per_alpha, vc.cap_fixed, cfg.cap_alpha, vc.has_captions, nullptr);
    report.per_video.push_back(vs);
  }

  detail::summarize(report, cfg.grid.alphas, pooled, pooled_fixed, cfg.cap_alpha, captions_exist,
                    &report.per_alpha);
  report.cap_a_defined = captions_exist;
  if (!captions_exist) report.warnings.push_back("no ground-truth captions; CapA undefined and CHOTA reported as HOTA");
  for (const auto& c : pooled)
    if (c.tp == 0) report.ass_a_defined = false;
  if (!report.ass_a_defined) report.warnings.push_back("some thresholds have no true positives; AssA reported as 1 there");
  return report;
}

// ---------------------------------------------------------------------------
// Frame mAP-METEOR

/// Caption similarity used for the METEOR threshold. `pred` may be null.
using CaptionSimilarity = std::function<double(const Caption* pred, const Caption& gt)>;

struct ApmConfig {
  std::vector<double> iou_thresholds{0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> meteor_thresholds{0.0, 0.05, 0.1, 0.15, 0.2};
  CaptionSimilarity similarity;  // defaults to meteor_lite
  unsigned jobs = 1;
};

struct ApmResult {
  double ap_m = 0.0;
  std::vector<std::vector<double>> grid;  // [iou threshold][meteor threshold], mean over frames
  std::size_t frames_evaluated = 0;
  std::vector<std::string> warnings;
};

/// All-points interpolated AP from TP flags in descending-score order.
inline double average_precision(const std::vector<char>& is_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> rec(n + 2, 0.0), prec(n + 2, 0.0);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    rec[i + 1] = static_cast<double>(tp) / static_cast<double>(num_gt);
    prec[i + 1] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  rec[n + 1] = 1.0;
  prec[n + 1] = 0.0;
  for (std::size_t i = n + 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i)
    if (rec[i + 1] != rec[i]) ap += (rec[i + 1] - rec[i]) * prec[i + 1];
  return ap;
}

namespace detail {

struct ApmFrame {
  std::vector<std::vector<double>> ap;  // per threshold pair
};

/// AP per threshold pair for one frame: predictions in descending score order
/// each take the unmatched gt with the highest IoU among those clearing both
/// thresholds.
inline std::vector<std::vector<double>> frame_ap(const std::vector<const Detection*>& preds,
                                                 const std::vector<const Caption*>& pred_caps,
                                                 const std::vector<const Detection*>& gts,
                                                 const std::vector<const Caption*>& gt_caps, const ApmConfig& cfg) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a]->score > preds[b]->score; });
  std::vector<std::vector<double>> ious(preds.size(), std::vector<double>(gts.size()));
  std::vector<std::vector<double>> sims(preds.size(), std::vector<double>(gts.size()));
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      ious[p][g] = iou(preds[p]->box, gts[g]->box);
      // Caption-less ground truth accepts any caption.
      sims[p][g] = gt_caps[g] ? cfg.similarity(pred_caps[p], *gt_caps[g]) : 1.0;
    }
  std::vector<std::vector<double>> out(cfg.iou_thresholds.size(), std::vector<double>(cfg.meteor_thresholds.size()));
  for (std::size_t a = 0; a < cfg.iou_thresholds.size(); ++a)
    for (std::size_t b = 0; b < cfg.meteor_thresholds.size(); ++b) {
      std::vector<char> used(gts.size(), 0), is_tp;
      for (std::size_t p : order) {
        int best = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          if (used[g] || ious[p][g] < cfg.iou_thresholds[a] || sims[p][g] < cfg.meteor_thresholds[b]) continue;
          if (best < 0 || ious[p][g] > ious[p][static_cast<std::size_t>(best)]) best = static_cast<int>(g);
        }
        if (best >= 0) used[static_cast<std::size_t>(best)] = 1;
        is_tp.push_back(best >= 0 ? 1 : 0);
      }
      out[a][b] = average_precision(is_tp, gts.size());
    }
  return out;
}

inline std::vector<std::vector<std::vector<double>>> video_apm(const VideoRecord* pred, const VideoRecord& gt,
                                                               const ApmConfig& cfg) {
  const auto frame_lists = [](const VideoRecord& v, int nframes) {
    std::vector<std::vector<std::pair<const Detection*, const Caption*>>> out(static_cast<std::size_t>(nframes));
    for (const auto& t : v.trajectories)
      for (const auto& d : t.detections)
        if (d.frame >= 0 && d.frame < nframes)
          out[static_cast<std::size_t>(d.frame)].emplace_back(&d, effective_caption(d, t));
    return out;
  };
  const auto gt_frames = frame_lists(gt, gt.num_frames);
  const auto pred_frames = pred ? frame_lists(*pred, gt.num_frames)
                                : std::vector<std::vector<std::pair<const Detection*, const Caption*>>>(
                                      static_cast<std::size_t>(gt.num_frames));
  std::vector<std::vector<std::vector<double>>> out;
  for (std::size_t t = 0; t < gt_frames.size(); ++t) {
    if (gt_frames[t].empty()) continue;
    std::vector<const Detection*> pd, gd;
    std::vector<const Caption*> pc, gc;
    for (const auto& [d, c] : pred_frames[t]) {
      pd.push_back(d);
      pc.push_back(c);
    }
    for (const auto& [d, c] : gt_frames[t]) {
      gd.push_back(d);
      gc.push_back(c);
    }
    out.push_back(frame_ap(pd, pc, gd, gc, cfg));
  }
  return out;
}

}  // namespace detail

/// Frame mAP-METEOR: per frame containing ground truth, AP averaged over the
/// IoU x METEOR threshold grid; then the mean over those frames.
inline ApmResult ap_m(const std::vector<VideoRecord>& pred, const std::vector<VideoRecord>& gt, ApmConfig cfg = {}) {
  if (!cfg.similarity) {
    cfg.similarity = [](const Caption* p, const Caption& g) { return p ? meteor_lite(*p, g) : 0.0; };
  }
  ApmResult res;
  std::vector<const VideoRecord*> gts;
  for (const auto& v : gt) gts.push_back(&v);
  std::sort(gts.begin(), gts.end(), [](auto* a, auto* b) { return a->video_id < b->video_id; });
  std::map<std::string, const VideoRecord*> pred_by_id;
  for (const auto& v : pred) pred_by_id.emplace(v.video_id, &v);

  std::vector<std::vector<std::vector<std::vector<double>>>> per_video(gts.size());
  parallel_for(gts.size(), cfg.jobs, [&](std::size_t i) {
    auto it = pred_by_id.find(gts[i]->video_id);
    per_video[i] = detail::video_apm(it == pred_by_id.end() ? nullptr : it->second, *gts[i], cfg);
  });
  for (std::size_t i = 0; i < gts.size(); ++i)
    if (!pred_by_id.count(gts[i]->video_id))
      res.warnings.push_back("video '" + gts[i]->video_id + "' missing from predictions; frames score 0");

  const std::size_t na = cfg.iou_thresholds.size(), nb = cfg.meteor_thresholds.size();
  res.grid.assign(na, std::vector<double>(nb, 0.0));
  double total = 0.0;
  for (const auto& frames : per_video)
    for (const auto& f : frames) {
      double frame_mean = 0.0;
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b) {
          res.grid[a][b] += f[a][b];
          frame_mean += f[a][b];
        }
      total += frame_mean / static_cast<double>(na * nb);
      ++res.frames_evaluated;
    }
  if (res.frames_evaluated == 0) {
    res.warnings.push_back("no frame contains ground truth; AP_M reported as 0");
    return res;
  }
  const double nf = static_cast<double>(res.frames_evaluated);
  for (auto& row : res.grid)
    for (auto& v : row) v /= nf;
  res.ap_m = total / nf;
  return res;
}

// ---------------------------------------------------------------------------
// Grounding IoUs

/// Inclusive frame interval.
struct Span {
  int start = 0;
  int end = 0;
  int length() const { return end >= start ? end - start + 1 : 0; }
};

struct GroundingIous {
  double s_iou = 0.0;
  double t_iou = 0.0;
  double v_iou = 0.0;
};

/// Per-frame boxes indexed by frame; missing frames are nullopt.
using FrameBoxes = std::vector<std::optional<Box>>;

inline GroundingIous grounding_ious(const FrameBoxes& pred_boxes, Span pred_span, const FrameBoxes& gt_boxes,
                                    Span gt_span) {
  const auto frame_iou = [&](int t) {
    if (t < 0) return 0.0;
    const auto ut = static_cast<std::size_t>(t);
    if (ut >= pred_boxes.size() || ut >= gt_boxes.size() || !pred_boxes[ut] || !gt_boxes[ut]) return 0.0;
    return iou(*pred_boxes[ut], *gt_boxes[ut]);
  };
  GroundingIous out;
  if (gt_span.length() > 0) {
    double sum = 0.0;
    for (int t = gt_span.start; t <= gt_span.end; ++t) sum += frame_iou(t);
    out.s_iou = sum / gt_span.length();
  }
  const Span inter{std::max(pred_span.start, gt_span.start), std::min(pred_span.end, gt_span.end)};
  const int uni = pred_span.length() + gt_span.length() - inter.length();
  if (uni > 0) {
    out.t_iou = static_cast<double>(inter.length()) / uni;
    double sum = 0.0;
    for (int t = inter.start; t <= inter.end; ++t) sum += frame_iou(t);
    out.v_iou = sum / uni;
  }
  return out;
}

}  // namespace densevoc
