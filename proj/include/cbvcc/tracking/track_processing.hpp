#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <vector>

#include "cbvcc/tracking/spline.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

// Minimum support points for spline gap filling; fewer fall back to linear.
inline constexpr std::size_t kSplineMinPoints = 4;
inline constexpr std::size_t kMinTrackPoints = 3;

// Fills every missing integer frame in [t_min, t_max]. Observed points are
// copied verbatim. x(t) and y(t) are interpolated independently.
inline Track interpolate_track(const Track& track) {
  if (track.size() < 2) {
    throw Error(ErrorKind::too_short, "track " + std::to_string(track.track_id) +
                                          " needs at least 2 points to interpolate");
  }
  Track out;
  out.track_id = track.track_id;
  out.source = TrackSource::interpolated;

  std::vector<double> t, xs, ys;
  t.reserve(track.size());
  for (const auto& p : track.points) {
    t.push_back(p.frame);
    xs.push_back(p.x);
    ys.push_back(p.y);
  }

  std::optional<NaturalCubicSpline> sx, sy;
  if (track.size() >= kSplineMinPoints) {
    sx.emplace(t, xs);
    sy.emplace(t, ys);
  }

  std::size_t next = 0;
  for (int f = track.t_min(); f <= track.t_max(); ++f) {
    if (track.points[next].frame == f) {
      out.points.push_back(track.points[next]);
      ++next;
      continue;
    }
    TrackPoint p{f, 0.0, 0.0};
    if (sx) {
      p.x = (*sx)(f);
      p.y = (*sy)(f);
    } else {
      const auto& a = track.points[next - 1];
      const auto& b = track.points[next];
      const double w = static_cast<double>(f - a.frame) / (b.frame - a.frame);
      p.x = a.x + w * (b.x - a.x);
      p.y = a.y + w * (b.y - a.y);
    }
    out.points.push_back(p);
  }
  return out;
}

// Picks the track that sits closest to the patch centre at the middle frame.
// Tracks under three coordinates are dropped. When no survivor covers the
// middle frame, each track is represented by its coordinate temporally
// nearest to it (earlier frame on ties).
inline std::optional<Track> select_focus_track(const std::vector<Track>& tracks,
                                               int mid_frame = kMidFrame) {
  const Track* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  bool best_covers = false;
  for (const auto& tr : tracks) {
    if (tr.size() < kMinTrackPoints) continue;
    const TrackPoint* ref = tr.at_frame(mid_frame);
    const bool covers = ref != nullptr;
    if (!covers) {
      int best_dt = std::numeric_limits<int>::max();
      for (const auto& p : tr.points) {
        const int dt = std::abs(p.frame - mid_frame);
        if (dt < best_dt) {
          best_dt = dt;
          ref = &p;
        }
      }
    }
    const double d = std::hypot(ref->x - kPatchCenter, ref->y - kPatchCenter);
    // A track covering the middle frame always beats one that does not.
    if ((covers && !best_covers) || (covers == best_covers && d < best_dist)) {
      best = &tr;
      best_dist = d;
      best_covers = covers;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace cbvcc::tracking
