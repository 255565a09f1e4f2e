#pragma once

#include <cstdint>
#include <vector>

#include "cbvcc/seed.hpp"
#include "cbvcc/tracking/blob_detector.hpp"
#include "cbvcc/tracking/linking.hpp"
#include "cbvcc/tracking/preprocess.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

struct TrackingOutput {
  std::vector<Track> tracks;
  std::vector<int> detections_per_frame;
  int tracks_with_gaps = 0;
  int gap_frames = 0;
};

// Preprocess -> detect -> link for one patch. Frame f uses noise stream
// derive_seed(patch_seed, f).
inline TrackingOutput track_patch(const VideoPatch& patch, const DetectionParams& det,
                                  const LinkParams& link, std::uint64_t patch_seed) {
  std::vector<std::vector<Point2>> per_frame;
  per_frame.reserve(patch.frames.size());
  TrackingOutput out;
  for (std::size_t f = 0; f < patch.frames.size(); ++f) {
    auto pre = preprocess_intensity(patch.frames[f], det.noise_floor_cutoff, det.noise_sigma,
                                    derive_seed(patch_seed, static_cast<std::uint64_t>(f)));
    std::vector<Point2> pts;
    for (const auto& b : detect_blobs(pre, det)) pts.push_back({b.x, b.y});
    out.detections_per_frame.push_back(static_cast<int>(pts.size()));
    per_frame.push_back(std::move(pts));
  }
  out.tracks = link_detections(per_frame, link).tracks;
  for (const auto& tr : out.tracks) {
    const int span = tr.t_max() - tr.t_min() + 1;
    const int gaps = span - static_cast<int>(tr.size());
    if (gaps > 0) {
      ++out.tracks_with_gaps;
      out.gap_frames += gaps;
    }
  }
  return out;
}

}  // namespace cbvcc::tracking
