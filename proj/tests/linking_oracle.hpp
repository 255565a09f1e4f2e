#pragma once

// Exhaustive reference for frame-by-frame linking. At each frame every
// partial injective map from detections to active track ends within the
// search range is enumerated; the winner has the most links, then the least
// summed squared displacement. Shared by the unit tests and the acceptance
// gate.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cbvcc/tracking/linking.hpp"

namespace cbvcc::testing {

struct OracleResult {
  double total_cost = 0.0;
  int n_links = 0;
  int n_tracks = 0;
};

namespace oracle_detail {

struct End {
  int last_frame;
  double x, y;
};

inline void enumerate(const std::vector<tracking::Point2>& dets, const std::vector<int>& active,
                      const std::vector<End>& ends, double r2, std::size_t j, std::vector<int>& cur,
                      std::vector<char>& used, int links, double cost, int& best_links, double& best_cost,
                      std::vector<int>& best) {
  if (j == dets.size()) {
    if (links > best_links || (links == best_links && cost < best_cost)) {
      best_links = links;
      best_cost = cost;
      best = cur;
    }
    return;
  }
  cur[j] = -1;
  enumerate(dets, active, ends, r2, j + 1, cur, used, links, cost, best_links, best_cost, best);
  for (std::size_t a = 0; a < active.size(); ++a) {
    if (used[a]) continue;
    const auto& e = ends[active[a]];
    const double d2 = (dets[j].x - e.x) * (dets[j].x - e.x) + (dets[j].y - e.y) * (dets[j].y - e.y);
    if (d2 > r2) continue;
    used[a] = 1;
    cur[j] = static_cast<int>(a);
    enumerate(dets, active, ends, r2, j + 1, cur, used, links + 1, cost + d2, best_links, best_cost, best);
    used[a] = 0;
  }
  cur[j] = -1;
}

}  // namespace oracle_detail

inline OracleResult brute_force_link(const std::vector<std::vector<tracking::Point2>>& per_frame,
                                     double search_range, int memory) {
  using oracle_detail::End;
  std::vector<End> ends;
  OracleResult res;
  const double r2 = search_range * search_range;
  for (int f = 0; f < static_cast<int>(per_frame.size()); ++f) {
    const auto& dets = per_frame[f];
    std::vector<int> active;
    for (int t = 0; t < static_cast<int>(ends.size()); ++t) {
      if (f - ends[t].last_frame - 1 <= memory) active.push_back(t);
    }
    std::vector<int> cur(dets.size(), -1), best(dets.size(), -1);
    std::vector<char> used(active.size(), 0);
    int best_links = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    oracle_detail::enumerate(dets, active, ends, r2, 0, cur, used, 0, 0.0, best_links, best_cost, best);
    res.n_links += best_links;
    res.total_cost += best_cost;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (best[j] >= 0) {
        ends[active[best[j]]] = {f, dets[j].x, dets[j].y};
      } else {
        ends.push_back({f, dets[j].x, dets[j].y});
      }
    }
  }
  res.n_tracks = static_cast<int>(ends.size());
  return res;
}

// Random instance: 1-3 drifting particles with dropouts and occasional
// spurious detections, at most 3 detections per frame over 20 frames.
inline std::vector<std::vector<tracking::Point2>> random_link_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 50.0);
  std::normal_distribution<double> step(0.0, 6.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n_particles = 1 + static_cast<int>(rng() % 3);
  std::vector<tracking::Point2> p(n_particles);
  for (auto& q : p) q = {pos(rng), pos(rng)};
  std::vector<std::vector<tracking::Point2>> frames(20);
  for (auto& dets : frames) {
    for (auto& q : p) {
      q.x = std::clamp(q.x + step(rng), 0.0, 50.0);
      q.y = std::clamp(q.y + step(rng), 0.0, 50.0);
      if (u(rng) > 0.15) dets.push_back(q);
    }
    if (dets.size() < 3 && u(rng) < 0.2) dets.push_back({pos(rng), pos(rng)});
    std::shuffle(dets.begin(), dets.end(), rng);
  }
  return frames;
}

}  // namespace cbvcc::testing
