#pragma once

#include <algorithm>
#include <vector>

#include "cbvcc/tracking/assignment.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

struct LinkParams {
  double search_range_px = 20.0;
  int memory_frames = 30;

  void validate() const {
    if (!(search_range_px > 0.0)) throw Error(ErrorKind::config, "search_range must be > 0");
    if (memory_frames < 0) throw Error(ErrorKind::config, "memory must be >= 0");
  }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct LinkResult {
  std::vector<Track> tracks;
  // Sum of squared link displacements and number of links over all frames.
  double total_cost = 0.0;
  int n_links = 0;
};

// Per-frame link choice between active track ends and new detections: the
// largest feasible matching, and among those the one with least total squared
// displacement. Returns the matched track index per detection (-1 = none).
inline std::vector<int> assign_frame(const std::vector<Point2>& track_ends,
                                     const std::vector<Point2>& detections,
                                     double search_range) {
  const int n = static_cast<int>(track_ends.size());
  const int m = static_cast<int>(detections.size());
  std::vector<int> match(static_cast<std::size_t>(m), -1);
  if (n == 0 || m == 0) return match;

  // Each feasible link earns a bonus larger than any achievable total squared
  // cost, so cardinality dominates and cost breaks the rest.
  const double r2 = search_range * search_range;
  const double bonus = r2 * (std::min(n, m) + 1) + 1.0;
  std::vector<double> cost(static_cast<std::size_t>(n) * m, 0.0);
  std::vector<char> feasible(cost.size(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double dx = detections[j].x - track_ends[i].x;
      const double dy = detections[j].y - track_ends[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 <= r2) {
        cost[static_cast<std::size_t>(i) * m + j] = d2 - bonus;
        feasible[static_cast<std::size_t>(i) * m + j] = 1;
      }
    }
  }
  const auto rows = solve_assignment(cost, n, m);
  for (int i = 0; i < n; ++i) {
    const int j = rows[i];
    if (j >= 0 && feasible[static_cast<std::size_t>(i) * m + j]) match[j] = i;
  }
  return match;
}

// Frame-by-frame linking with gap memory. Detections are put in canonical
// (x, y) order first so the result does not depend on input order; new
// tracks are numbered in creation order.
inline LinkResult link_detections(const std::vector<std::vector<Point2>>& per_frame,
                                  const LinkParams& params) {
  params.validate();
  LinkResult result;
  auto& tracks = result.tracks;

  for (int frame = 0; frame < static_cast<int>(per_frame.size()); ++frame) {
    auto dets = per_frame[frame];
    std::stable_sort(dets.begin(), dets.end(), [](const Point2& a, const Point2& b) {
      return a.x < b.x || (a.x == b.x && a.y < b.y);
    });

    std::vector<int> active;
    std::vector<Point2> ends;
    for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
      const auto& last = tracks[t].points.back();
      if (frame - last.frame - 1 <= params.memory_frames) {
        active.push_back(t);
        ends.push_back({last.x, last.y});
      }
    }

    const auto match = assign_frame(ends, dets, params.search_range_px);
    for (int j = 0; j < static_cast<int>(dets.size()); ++j) {
      const TrackPoint pt{frame, dets[j].x, dets[j].y};
      if (match[j] >= 0) {
        auto& tr = tracks[active[match[j]]];
        const double dx = pt.x - tr.points.back().x;
        const double dy = pt.y - tr.points.back().y;
        result.total_cost += dx * dx + dy * dy;
        ++result.n_links;
        tr.points.push_back(pt);
      } else {
        Track tr;
        tr.track_id = static_cast<int>(tracks.size());
        tr.source = TrackSource::automated;
        tr.points.push_back(pt);
        tracks.push_back(std::move(tr));
      }
    }
  }
  return result;
}

}  // namespace cbvcc::tracking
