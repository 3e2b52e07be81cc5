// File formats: track-grouped datasets, association/feature matrices,
// identity files, external-score and likelihood sidecars, grounding queries,
// flat MOT-style text and evaluation reports.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "densevoc/aggregate.hpp"
#include "densevoc/assoc.hpp"
#include "densevoc/capmetrics.hpp"
#include "densevoc/core.hpp"
#include "densevoc/eval.hpp"
#include "densevoc/ground.hpp"

namespace densevoc::io {

using json = nlohmann::json;

/// Malformed or schema-violating input. The message carries the location.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParseOptions {
  bool strict = false;  // reject unknown fields
};

// ---------------------------------------------------------------------------
// Low-level helpers

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << content;
  if (!out) throw FormatError(path + ": write failed");
}

/// Parses JSON text, converting syntax errors into line:column diagnostics.
inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw FormatError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

namespace detail {

struct Ctx {
  std::string source;
  const ParseOptions& opts;

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw FormatError(source + ": " + path + ": " + msg);
  }

  const json& field(const json& obj, const char* key, const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
  }

  void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    if (!opts.strict) return;
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(path, "unknown field '" + k + "'");
    }
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "value is not finite");
    return d;
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
  }
};

/// Accepts either a top-level array or an object holding `key`.
inline const json& records(const json& doc, const char* key, const Ctx& ctx) {
  if (doc.is_array()) return doc;
  if (doc.is_object() && doc.contains(key) && doc[key].is_array()) return doc[key];
  ctx.fail("$", std::string("expected an array or an object with '") + key + "'");
}

inline Box parse_box(const json& obj, const std::string& path, const Ctx& ctx) {
  if (obj.contains("box")) {
    const json& b = ctx.array(obj["box"], path + ".box");
    if (b.size() != 4) ctx.fail(path + ".box", "expected [x1, y1, x2, y2]");
    Box box{ctx.number(b[0], path + ".box[0]"), ctx.number(b[1], path + ".box[1]"), ctx.number(b[2], path + ".box[2]"),
            ctx.number(b[3], path + ".box[3]")};
    if (!box.valid()) ctx.fail(path + ".box", "corners must satisfy x1 <= x2 and y1 <= y2");
    return box;
  }
  if (obj.contains("xywh")) {
    const json& b = ctx.array(obj["xywh"], path + ".xywh");
    if (b.size() != 4) ctx.fail(path + ".xywh", "expected [x, y, w, h]");
    const double w = ctx.number(b[2], path + ".xywh[2]"), h = ctx.number(b[3], path + ".xywh[3]");
    if (w < 0.0 || h < 0.0) ctx.fail(path + ".xywh", "negative size");
    return Box::from_xywh(ctx.number(b[0], path + ".xywh[0]"), ctx.number(b[1], path + ".xywh[1]"), w, h);
  }
  ctx.fail(path, "missing field 'box'");
}

inline json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset files

/// Parses a dataset document. Boxes in tracks without a track_id become
/// single-detection trajectories with fresh ids above the largest given id.
inline std::vector<VideoRecord> parse_dataset(const json& doc, const std::string& source,
                                              const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  const json& videos = detail::records(doc, "videos", ctx);
  std::vector<VideoRecord> out;
  std::set<std::string> seen;
  for (std::size_t vi = 0; vi < videos.size(); ++vi) {
    const std::string vpath = "videos[" + std::to_string(vi) + "]";
    const json& vj = videos[vi];
    ctx.check_keys(vj, {"video_id", "num_frames", "tracks"}, vpath);
    VideoRecord v;
    v.video_id = ctx.string(ctx.field(vj, "video_id", vpath), vpath + ".video_id");
    if (!seen.insert(v.video_id).second) ctx.fail(vpath, "duplicate video_id '" + v.video_id + "'");
    v.num_frames = ctx.integer(ctx.field(vj, "num_frames", vpath), vpath + ".num_frames");
    if (v.num_frames < 1) ctx.fail(vpath + ".num_frames", "must be >= 1");
    const json& tracks = ctx.array(ctx.field(vj, "tracks", vpath), vpath + ".tracks");

    std::vector<Detection> untracked;
    int max_id = 0;
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
      const std::string tpath = vpath + ".tracks[" + std::to_string(ti) + "]";
      const json& tj = tracks[ti];
      ctx.check_keys(tj, {"track_id", "caption", "boxes"}, tpath);
      Trajectory traj;
      const bool has_id = tj.contains("track_id") && !tj["track_id"].is_null();
      if (has_id) {
        traj.track_id = ctx.integer(tj["track_id"], tpath + ".track_id");
        if (traj.track_id < 1) ctx.fail(tpath + ".track_id", "must be positive");
        max_id = std::max(max_id, traj.track_id);
      }
      if (tj.contains("caption") && !tj["caption"].is_null())
        traj.caption = make_caption(ctx.string(tj["caption"], tpath + ".caption"));
      const json& boxes = ctx.array(ctx.field(tj, "boxes", tpath), tpath + ".boxes");
      for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
        const std::string bpath = tpath + ".boxes[" + std::to_string(bi) + "]";
        const json& bj = boxes[bi];
        ctx.check_keys(bj, {"frame", "box", "xywh", "score", "caption"}, bpath);
        Detection d;
        d.frame = ctx.integer(ctx.field(bj, "frame", bpath), bpath + ".frame");
        if (d.frame < 0 || d.frame >= v.num_frames) ctx.fail(bpath + ".frame", "outside [0, num_frames)");
        d.box = detail::parse_box(bj, bpath, ctx);
        if (bj.contains("score")) {
          d.score = ctx.number(bj["score"], bpath + ".score");
          if (d.score < 0.0 || d.score > 1.0) ctx.fail(bpath + ".score", "must lie in [0,1]");
        }
        if (bj.contains("caption") && !bj["caption"].is_null())
          d.caption = make_caption(ctx.string(bj["caption"], bpath + ".caption"));
        if (has_id) {
          traj.detections.push_back(std::move(d));
        } else {
          if (!d.caption && traj.caption) d.caption = traj.caption;
          untracked.push_back(std::move(d));
        }
      }
      if (has_id) {
        std::stable_sort(traj.detections.begin(), traj.detections.end(),
                         [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
        for (std::size_t k = 1; k < traj.detections.size(); ++k)
          if (traj.detections[k].frame == traj.detections[k - 1].frame)
            ctx.fail(tpath, "two boxes in frame " + std::to_string(traj.detections[k].frame));
        v.trajectories.push_back(std::move(traj));
      }
    }
    for (auto& d : untracked) {
      Trajectory t;
      t.track_id = ++max_id;
      t.detections.push_back(std::move(d));
      v.trajectories.push_back(std::move(t));
    }
    try {
      validate(v);
    } catch (const InvalidInput& e) {
      ctx.fail(vpath, e.what());
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<VideoRecord> load_dataset(const std::string& path, const ParseOptions& opts = {}) {
  return parse_dataset(parse_json(read_file(path), path), path, opts);
}

inline json dataset_json(const std::vector<VideoRecord>& videos) {
  json out = json::array();
  for (const auto& v : videos) {
    json tracks = json::array();
    for (const auto& t : v.trajectories) {
      json boxes = json::array();
      for (const auto& d : t.detections) {
        json b = {{"frame", d.frame}, {"box", detail::box_json(d.box)}};
        if (d.score != 1.0) b["score"] = d.score;
        if (d.caption) b["caption"] = d.caption->raw;
        boxes.push_back(std::move(b));
      }
      json tj = {{"track_id", t.track_id}, {"boxes", std::move(boxes)}};
      if (t.caption) tj["caption"] = t.caption->raw;
      tracks.push_back(std::move(tj));
    }
    out.push_back({{"video_id", v.video_id}, {"num_frames", v.num_frames}, {"tracks", std::move(tracks)}});
  }
  return out;
}

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

inline void save_dataset(const std::string& path, const std::vector<VideoRecord>& videos) {
  write_file(path, dump(dataset_json(videos)));
}

// ---------------------------------------------------------------------------
// Flat MOT-style text: "frame,id,x,y,w,h,score[,...]" with 1-based frames and
// id -1 for untracked detections.

inline VideoRecord parse_mot_text(const std::string& text, const std::string& video_id, const std::string& source,
                                  int num_frames = 0) {
  std::map<int, Trajectory> tracks;
  std::vector<Detection> untracked;
  int max_frame = 0, max_id = 0;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::vector<double> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        f.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw FormatError(source + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    if (f.size() < 6) throw FormatError(source + ":" + std::to_string(lineno) + ": expected at least 6 fields");
    Detection d;
    d.frame = static_cast<int>(f[0]) - 1;
    if (d.frame < 0) throw FormatError(source + ":" + std::to_string(lineno) + ": frames are 1-based");
    if (f[4] < 0.0 || f[5] < 0.0) throw FormatError(source + ":" + std::to_string(lineno) + ": negative box size");
    d.box = Box::from_xywh(f[2], f[3], f[4], f[5]);
    d.score = f.size() > 6 ? std::clamp(f[6], 0.0, 1.0) : 1.0;
    max_frame = std::max(max_frame, d.frame);
    const int id = static_cast<int>(f[1]);
    if (id > 0) {
      max_id = std::max(max_id, id);
      auto& t = tracks[id];
      t.track_id = id;
      t.detections.push_back(d);
    } else {
      untracked.push_back(d);
    }
  }
  VideoRecord v;
  v.video_id = video_id;
  v.num_frames = std::max(num_frames, max_frame + 1);
  for (auto& [id, t] : tracks) {
    std::stable_sort(t.detections.begin(), t.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    v.trajectories.push_back(std::move(t));
  }
  for (auto& d : untracked) v.trajectories.push_back(Trajectory{++max_id, {d}, std::nullopt});
  try {
    validate(v);
  } catch (const InvalidInput& e) {
    throw FormatError(source + ": " + e.what());
  }
  return v;
}

// ---------------------------------------------------------------------------
// Matrix files

struct MatrixRecord {
  std::string video_id;
  std::vector<int> frame_of;
  FeatureMatrix values;  // M x D (D = M for association matrices)
};

inline std::vector<MatrixRecord> parse_matrices(const json& doc, const std::string& source,
                                                const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  std::vector<const json*> items;
  if (doc.is_array()) {
    for (const auto& j : doc) items.push_back(&j);
  } else {
    items.push_back(&doc);
  }
  std::vector<MatrixRecord> out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const json& j = *items[k];
    const std::string path = doc.is_array() ? "[" + std::to_string(k) + "]" : "$";
    ctx.check_keys(j, {"video_id", "frame_of", "values", "dim"}, path);
    MatrixRecord r;
    r.video_id = j.contains("video_id") ? ctx.string(j["video_id"], path + ".video_id") : std::string();
    const json& dim = ctx.field(j, "dim", path);
    long rows = 0, cols = 0;
    if (dim.is_array()) {
      if (dim.size() != 2) ctx.fail(path + ".dim", "expected M or [M, D]");
      rows = ctx.integer(dim[0], path + ".dim[0]");
      cols = ctx.integer(dim[1], path + ".dim[1]");
    } else {
      rows = cols = ctx.integer(dim, path + ".dim");
    }
    if (rows < 0 || cols < 0) ctx.fail(path + ".dim", "negative dimension");
    const json& vals = ctx.array(ctx.field(j, "values", path), path + ".values");
    if (vals.size() != static_cast<std::size_t>(rows * cols))
      ctx.fail(path + ".values", "has " + std::to_string(vals.size()) + " entries, expected " +
                                     std::to_string(rows * cols));
    r.values.resize(rows, cols);
    for (long i = 0; i < rows; ++i)
      for (long c = 0; c < cols; ++c)
        r.values(i, c) = ctx.number(vals[static_cast<std::size_t>(i * cols + c)],
                                    path + ".values[" + std::to_string(i * cols + c) + "]");
    if (j.contains("frame_of")) {
      const json& fo = ctx.array(j["frame_of"], path + ".frame_of");
      for (std::size_t i = 0; i < fo.size(); ++i) r.frame_of.push_back(ctx.integer(fo[i], path + ".frame_of"));
      if (r.frame_of.size() != static_cast<std::size_t>(rows))
        ctx.fail(path + ".frame_of", "length differs from the row count");
    } else {
      for (long i = 0; i < rows; ++i) r.frame_of.push_back(static_cast<int>(i));
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<MatrixRecord> load_matrices(const std::string& path, const ParseOptions& opts = {}) {
  return parse_matrices(parse_json(read_file(path), path), path, opts);
}

inline AssocMatrix to_assoc(const MatrixRecord& r, const std::string& source) {
  if (r.values.rows() != r.values.cols())
    throw FormatError(source + ": video '" + r.video_id + "': association matrix must be square");
  return AssocMatrix{Eigen::MatrixXd(r.values), r.frame_of};
}

inline json matrix_json(const std::string& video_id, const std::vector<int>& frame_of, const FeatureMatrix& m,
                        bool square) {
  json vals = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) vals.push_back(m(i, c));
  json dim = square ? json(m.rows()) : json::array({m.rows(), m.cols()});
  return {{"video_id", video_id}, {"frame_of", frame_of}, {"values", std::move(vals)}, {"dim", std::move(dim)}};
}

// ---------------------------------------------------------------------------
// Identity files: {video_id, frame_of, ids}

struct IdentityRecord {
  std::string video_id;
  std::vector<int> frame_of;
  IdentityAssignment ids;
};

inline json identity_json(const IdentityRecord& r) {
  return {{"video_id", r.video_id}, {"frame_of", r.frame_of}, {"ids", r.ids.ids}};
}

inline std::vector<IdentityRecord> parse_identities(const json& doc, const std::string& source,
                                                    const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  std::vector<const json*> items;
  if (doc.is_array()) {
    for (const auto& j : doc) items.push_back(&j);
  } else {
    items.push_back(&doc);
  }
  std::vector<IdentityRecord> out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const json& j = *items[k];
    const std::string path = doc.is_array() ? "[" + std::to_string(k) + "]" : "$";
    ctx.check_keys(j, {"video_id", "frame_of", "ids"}, path);
    IdentityRecord r;
    r.video_id = j.contains("video_id") ? ctx.string(j["video_id"], path + ".video_id") : std::string();
    for (const auto& v : ctx.array(ctx.field(j, "ids", path), path + ".ids")) {
      const int id = ctx.integer(v, path + ".ids");
      if (id < 1) ctx.fail(path + ".ids", "ids must be positive");
      r.ids.ids.push_back(id);
    }
    if (j.contains("frame_of"))
      for (const auto& v : ctx.array(j["frame_of"], path + ".frame_of"))
        r.frame_of.push_back(ctx.integer(v, path + ".frame_of"));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// External caption scores: records {video_id, pred_observation_index, gt_track_id, score}

inline TableExternalScorer parse_external_scores(const json& doc, const std::string& source,
                                                 const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  TableExternalScorer table;
  const json& recs = detail::records(doc, "records", ctx);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string path = "records[" + std::to_string(i) + "]";
    const json& r = recs[i];
    ctx.check_keys(r, {"video_id", "pred_observation_index", "gt_track_id", "score"}, path);
    PairKey key;
    key.video_id = ctx.string(ctx.field(r, "video_id", path), path + ".video_id");
    const int obs = ctx.integer(ctx.field(r, "pred_observation_index", path), path + ".pred_observation_index");
    if (obs < 0) ctx.fail(path + ".pred_observation_index", "must be >= 0");
    key.pred_observation = static_cast<std::size_t>(obs);
    key.gt_track_id = ctx.integer(ctx.field(r, "gt_track_id", path), path + ".gt_track_id");
    const double score = ctx.number(ctx.field(r, "score", path), path + ".score");
    if (score < 0.0 || score > 1.0) ctx.fail(path + ".score", "must lie in [0,1]");
    table.set(key, score);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Likelihood tables: per-observation records {video_id, frame, observation_index,
// query_id, nll}; per-track records {video_id, track_id, query_id, nll}.

inline TableScorer parse_likelihoods(const json& doc, const std::string& source, const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  TableScorer table;
  const json& recs = detail::records(doc, "records", ctx);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string path = "records[" + std::to_string(i) + "]";
    const json& r = recs[i];
    ctx.check_keys(r, {"video_id", "frame", "observation_index", "track_id", "query_id", "nll"}, path);
    const std::string video = ctx.string(ctx.field(r, "video_id", path), path + ".video_id");
    const std::string query = ctx.string(ctx.field(r, "query_id", path), path + ".query_id");
    const double nll = ctx.number(ctx.field(r, "nll", path), path + ".nll");
    if (nll < 0.0) ctx.fail(path + ".nll", "must be >= 0");
    if (r.contains("track_id") && !r.contains("frame")) {
      table.set_track(video, ctx.integer(r["track_id"], path + ".track_id"), query, nll);
    } else {
      const int frame = ctx.integer(ctx.field(r, "frame", path), path + ".frame");
      const int obs = ctx.integer(ctx.field(r, "observation_index", path), path + ".observation_index");
      if (obs < 0) ctx.fail(path + ".observation_index", "must be >= 0");
      table.set_observation(video, frame, static_cast<std::size_t>(obs), query, nll);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Grounding queries: {video_id, query_id, caption, span: [s, e], boxes: [{frame, box}]}

inline std::vector<GroundingQuery> parse_queries(const json& doc, const std::string& source,
                                                 const ParseOptions& opts = {}) {
  const detail::Ctx ctx{source, opts};
  std::vector<GroundingQuery> out;
  const json& recs = detail::records(doc, "queries", ctx);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string path = "queries[" + std::to_string(i) + "]";
    const json& r = recs[i];
    ctx.check_keys(r, {"video_id", "query_id", "caption", "span", "boxes"}, path);
    GroundingQuery q;
    q.video_id = ctx.string(ctx.field(r, "video_id", path), path + ".video_id");
    q.query_id = ctx.string(ctx.field(r, "query_id", path), path + ".query_id");
    if (r.contains("caption")) q.caption = make_caption(ctx.string(r["caption"], path + ".caption"));
    const json& span = ctx.array(ctx.field(r, "span", path), path + ".span");
    if (span.size() != 2) ctx.fail(path + ".span", "expected [start, end]");
    q.span = {ctx.integer(span[0], path + ".span[0]"), ctx.integer(span[1], path + ".span[1]")};
    if (q.span.start < 0 || q.span.end < q.span.start) ctx.fail(path + ".span", "invalid inclusive span");
    q.gt_boxes.resize(static_cast<std::size_t>(q.span.end + 1));
    const json& boxes = ctx.array(ctx.field(r, "boxes", path), path + ".boxes");
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const std::string bpath = path + ".boxes[" + std::to_string(b) + "]";
      ctx.check_keys(boxes[b], {"frame", "box", "xywh"}, bpath);
      const int frame = ctx.integer(ctx.field(boxes[b], "frame", bpath), bpath + ".frame");
      if (frame < 0) ctx.fail(bpath + ".frame", "must be >= 0");
      if (static_cast<std::size_t>(frame) >= q.gt_boxes.size()) q.gt_boxes.resize(static_cast<std::size_t>(frame) + 1);
      q.gt_boxes[static_cast<std::size_t>(frame)] = detail::parse_box(boxes[b], bpath, ctx);
    }
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline json report_json(const EvalReport& r, const ApmResult* apm = nullptr) {
  json per_alpha = json::array();
  for (const auto& a : r.per_alpha)
    per_alpha.push_back({{"alpha", a.alpha},
                         {"DetA", a.det_a},
                         {"AssA", a.ass_a},
                         {"CapA", a.cap_a},
                         {"HOTA", a.hota},
                         {"CHOTA", a.chota},
                         {"TP", a.tp},
                         {"FP", a.fp},
                         {"FN", a.fn},
                         {"TP_prime", a.tp_prime}});
  json per_video = json::array();
  for (const auto& v : r.per_video)
    per_video.push_back({{"video_id", v.video_id},
                         {"DetA", v.det_a},
                         {"AssA", v.ass_a},
                         {"CapA", v.cap_a},
                         {"HOTA", v.hota},
                         {"CHOTA", v.chota},
                         {"CapA_defined", v.cap_a_defined},
                         {"prediction_missing", v.prediction_missing}});
  json out = {{"CHOTA", r.chota},
              {"HOTA", r.hota},
              {"DetA", r.det_a},
              {"AssA", r.ass_a},
              {"CapA", r.cap_a},
              {"AssA_defined", r.ass_a_defined},
              {"CapA_defined", r.cap_a_defined},
              {"caption_metrics", r.caption_metrics},
              {"caption_divisor", r.caption_divisor},
              {"capa_alpha", r.cap_alpha_mode},
              {"per_alpha", std::move(per_alpha)},
              {"per_video", std::move(per_video)},
              {"warnings", r.warnings}};
  if (apm) {
    out["AP_M"] = apm->ap_m;
    out["AP_M_grid"] = apm->grid;
    out["AP_M_frames"] = apm->frames_evaluated;
  }
  return out;
}

inline json apm_json(const ApmResult& r, const ApmConfig& cfg) {
  return {{"AP_M", r.ap_m},
          {"grid", r.grid},
          {"iou_thresholds", cfg.iou_thresholds},
          {"meteor_thresholds", cfg.meteor_thresholds},
          {"frames_evaluated", r.frames_evaluated},
          {"warnings", r.warnings}};
}

/// Shortest round-trip decimal form, as used in summaries.
inline std::string fmt_double(double v) { return json(v).dump(); }

/// Flat key=value summary, one pair per line.
inline std::string summary_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline std::vector<std::pair<std::string, std::string>> chota_summary(const EvalReport& r) {
  std::size_t tp = 0, fp = 0, fn = 0, tpp = 0;
  for (const auto& a : r.per_alpha) {
    tp += a.tp;
    fp += a.fp;
    fn += a.fn;
    tpp += a.tp_prime;
  }
  return {{"CHOTA", fmt_double(r.chota)},
          {"HOTA", fmt_double(r.hota)},
          {"DetA", fmt_double(r.det_a)},
          {"AssA", fmt_double(r.ass_a)},
          {"CapA", fmt_double(r.cap_a)},
          {"CapA_defined", r.cap_a_defined ? "true" : "false"},
          {"AssA_defined", r.ass_a_defined ? "true" : "false"},
          {"caption_divisor", std::to_string(r.caption_divisor)},
          {"TP_sum", std::to_string(tp)},
          {"FP_sum", std::to_string(fp)},
          {"FN_sum", std::to_string(fn)},
          {"TP_prime_sum", std::to_string(tpp)},
          {"videos", std::to_string(r.per_video.size())},
          {"warnings", std::to_string(r.warnings.size())}};
}

}  // namespace densevoc::io
