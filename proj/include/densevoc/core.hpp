// Domain types and box geometry shared by every densevoc module.
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace densevoc {

/// Raised for malformed inputs (dimension mismatches, invariant violations).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box stored as corners. Zero-area boxes are legal.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static Box from_xywh(double x, double y, double w, double h) { return {x, y, x + w, y + h}; }

  double width() const { return std::max(0.0, x2 - x1); }
  double height() const { return std::max(0.0, y2 - y1); }
  double area() const { return width() * height(); }
  bool valid() const { return x1 <= x2 && y1 <= y2; }

  Box translated(double dx, double dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }

  friend bool operator==(const Box&, const Box&) = default;
};

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// Smallest box enclosing both inputs.
inline Box hull(const Box& a, const Box& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

/// Intersection over union; 0 whenever either box (and hence the union
/// computation for a degenerate pair) has zero area.
inline double iou(const Box& a, const Box& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double inter = intersection_area(a, b);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

/// Generalized IoU: IoU minus the fraction of the enclosing box not covered
/// by the union.
inline double giou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull_area = hull(a, b).area();
  if (hull_area <= 0.0) return 0.0;
  const double ratio = uni > 0.0 ? inter / uni : 0.0;
  return ratio - (hull_area - uni) / hull_area;
}

/// Lowercased token sequence plus the text it came from.
struct Caption {
  std::vector<std::string> tokens;
  std::string raw;

  bool empty() const { return tokens.empty(); }
  friend bool operator==(const Caption& a, const Caption& b) { return a.tokens == b.tokens; }
};

struct Detection {
  int frame = 0;
  Box box;
  double score = 1.0;
  std::optional<int> track_id;
  std::optional<Caption> caption;
};

struct Trajectory {
  int track_id = 0;
  std::vector<Detection> detections;  // ordered by frame
  std::optional<Caption> caption;
};

struct VideoRecord {
  std::string video_id;
  int num_frames = 1;
  std::vector<Trajectory> trajectories;

  std::size_t num_detections() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.detections.size();
    return n;
  }
};

/// Reference to one detection inside a VideoRecord.
struct ObservationRef {
  int frame = 0;
  std::size_t track_index = 0;  // index into VideoRecord::trajectories
  std::size_t det_index = 0;    // index into Trajectory::detections
};

/// Canonical observation order of a video: frame-major, then trajectory order
/// within the record. Matrix rows, observation indices in sidecar files and
/// identity files all refer to this order.
inline std::vector<ObservationRef> observation_order(const VideoRecord& v) {
  std::vector<ObservationRef> out;
  out.reserve(v.num_detections());
  for (std::size_t t = 0; t < v.trajectories.size(); ++t)
    for (std::size_t d = 0; d < v.trajectories[t].detections.size(); ++d)
      out.push_back({v.trajectories[t].detections[d].frame, t, d});
  std::stable_sort(out.begin(), out.end(),
                   [](const ObservationRef& a, const ObservationRef& b) { return a.frame < b.frame; });
  return out;
}

/// Per-frame detection lists (with track_id set) in canonical observation order.
inline std::vector<std::vector<Detection>> frames_of(const VideoRecord& v) {
  std::vector<std::vector<Detection>> frames(static_cast<std::size_t>(std::max(v.num_frames, 0)));
  for (const auto& ref : observation_order(v)) {
    const auto& traj = v.trajectories[ref.track_index];
    Detection d = traj.detections[ref.det_index];
    d.track_id = traj.track_id;
    if (ref.frame >= 0 && static_cast<std::size_t>(ref.frame) < frames.size())
      frames[static_cast<std::size_t>(ref.frame)].push_back(std::move(d));
  }
  return frames;
}

/// Flattens trajectories into detections carrying their track_id.
inline std::vector<Detection> flatten(const VideoRecord& v) {
  std::vector<Detection> out;
  out.reserve(v.num_detections());
  for (const auto& t : v.trajectories)
    for (auto d : t.detections) {
      d.track_id = t.track_id;
      out.push_back(std::move(d));
    }
  return out;
}

/// Inverse of flatten: groups detections by track_id (ascending id), frames
/// sorted. Trajectory captions are taken from `captions` when provided.
inline std::vector<Trajectory> regroup(const std::vector<Detection>& dets,
                                       const std::map<int, Caption>& captions = {}) {
  std::map<int, Trajectory> by_id;
  for (const auto& d : dets) {
    if (!d.track_id) throw InvalidInput("regroup: detection without track_id");
    auto& t = by_id[*d.track_id];
    t.track_id = *d.track_id;
    t.detections.push_back(d);
  }
  std::vector<Trajectory> out;
  out.reserve(by_id.size());
  for (auto& [id, t] : by_id) {
    std::stable_sort(t.detections.begin(), t.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    if (auto it = captions.find(id); it != captions.end()) t.caption = it->second;
    out.push_back(std::move(t));
  }
  return out;
}

/// Checks the record-level invariants; throws InvalidInput naming the first
/// violation.
inline void validate(const VideoRecord& v) {
  const std::string where = "video '" + v.video_id + "': ";
  if (v.num_frames < 1) throw InvalidInput(where + "num_frames must be >= 1");
  std::vector<int> ids;
  for (const auto& t : v.trajectories) {
    if (t.track_id < 1) throw InvalidInput(where + "track_id must be positive");
    ids.push_back(t.track_id);
    int prev = -1;
    for (const auto& d : t.detections) {
      if (d.frame < 0 || d.frame >= v.num_frames)
        throw InvalidInput(where + "track " + std::to_string(t.track_id) + " has frame " +
                           std::to_string(d.frame) + " outside [0, num_frames)");
      if (d.frame <= prev)
        throw InvalidInput(where + "track " + std::to_string(t.track_id) +
                           " frames must be strictly increasing");
      prev = d.frame;
      if (!d.box.valid())
        throw InvalidInput(where + "track " + std::to_string(t.track_id) + " has an inverted box");
      if (!(d.score >= 0.0 && d.score <= 1.0))
        throw InvalidInput(where + "track " + std::to_string(t.track_id) + " score outside [0,1]");
      if (d.track_id && *d.track_id != t.track_id)
        throw InvalidInput(where + "detection track_id disagrees with its trajectory");
    }
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw InvalidInput(where + "duplicate track_id");
}

}  // namespace densevoc
