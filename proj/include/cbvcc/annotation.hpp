#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

#include "cbvcc/features.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::annotation {

inline constexpr double kStraightnessThreshold = 0.5;
inline constexpr double kTurnThresholdDeg = 90.0;

enum class Category { Class1Turn, Class0Straight, Class0Stationary, Class0Background, Ambiguous };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::Class1Turn: return "Class1Turn";
    case Category::Class0Straight: return "Class0Straight";
    case Category::Class0Stationary: return "Class0Stationary";
    case Category::Class0Background: return "Class0Background";
    case Category::Ambiguous: return "Ambiguous";
  }
  return "";
}

// Label implied by a category; ambiguous patches have none.
inline std::optional<int> label_of(Category c) {
  switch (c) {
    case Category::Class1Turn: return 1;
    case Category::Ambiguous: return std::nullopt;
    default: return 0;
  }
}

struct AnnotationResult {
  Category category = Category::Class0Background;
  std::optional<double> net_turning_angle_deg;
  std::optional<double> straightness_before;
  std::optional<double> straightness_after;
};

// Deviation from straight-ahead at the annotation frame, in degrees:
// 0 keeps heading, 180 reverses. Uses first point, point at t_ann, last point.
inline double net_turning_angle(const Track& track, int t_ann = kMidFrame) {
  const TrackPoint* mid = track.at_frame(t_ann);
  if (!mid || track.empty() || track.t_min() >= t_ann || track.t_max() <= t_ann) {
    throw Error(ErrorKind::degenerate, "track does not span the annotation frame with a step on each side");
  }
  const auto& a = track.points.front();
  const auto& c = track.points.back();
  const double ux = mid->x - a.x, uy = mid->y - a.y;
  const double vx = c.x - mid->x, vy = c.y - mid->y;
  if ((ux == 0.0 && uy == 0.0) || (vx == 0.0 && vy == 0.0)) {
    throw Error(ErrorKind::degenerate, "zero-length direction vector at the annotation frame");
  }
  return features::vector_angle(ux, uy, vx, vy) * 180.0 / std::numbers::pi;
}

enum class Side { before, after };

// Displacement over path length of the part of the track with t <= t_ann
// (before) or t >= t_ann (after). Zero path length gives 0.
inline double segment_straightness(const Track& track, int t_ann, Side side) {
  const TrackPoint* first = nullptr;
  const TrackPoint* prev = nullptr;
  double path = 0.0;
  int n = 0;
  for (const auto& p : track.points) {
    const bool in = side == Side::before ? p.frame <= t_ann : p.frame >= t_ann;
    if (!in) continue;
    if (!first) first = &p;
    if (prev) path += std::hypot(p.x - prev->x, p.y - prev->y);
    prev = &p;
    ++n;
  }
  if (n < 2) throw Error(ErrorKind::degenerate, "segment has fewer than 2 points");
  if (!(path > 0.0)) return 0.0;
  return std::min(1.0, std::hypot(prev->x - first->x, prev->y - first->y) / path);
}

// Pre-screening rule set. Stationary needs only the two straightness values;
// the turn/straight split needs the turning angle as well. Anything the
// rules do not cover, or cannot evaluate, is Ambiguous.
inline AnnotationResult annotate(const std::optional<Track>& track, int t_ann = kMidFrame) {
  AnnotationResult r;
  if (!track || track->empty()) {
    r.category = Category::Class0Background;
    return r;
  }
  r.category = Category::Ambiguous;
  try {
    r.straightness_before = segment_straightness(*track, t_ann, Side::before);
  } catch (const Error&) {
  }
  try {
    r.straightness_after = segment_straightness(*track, t_ann, Side::after);
  } catch (const Error&) {
  }
  try {
    r.net_turning_angle_deg = net_turning_angle(*track, t_ann);
  } catch (const Error&) {
  }
  if (!r.straightness_before || !r.straightness_after) return r;

  const bool straight_b = *r.straightness_before > kStraightnessThreshold;
  const bool straight_a = *r.straightness_after > kStraightnessThreshold;
  if (!straight_b && !straight_a) {
    r.category = Category::Class0Stationary;
  } else if (straight_b && straight_a && r.net_turning_angle_deg) {
    r.category = *r.net_turning_angle_deg > kTurnThresholdDeg ? Category::Class1Turn
                                                               : Category::Class0Straight;
  }
  return r;
}

}  // namespace cbvcc::annotation
