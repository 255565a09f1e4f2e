#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cbvcc/tracking/linking.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::quality {

// Foreground / background radii around the nearest centroid, in micrometres.
inline constexpr double kForegroundRadiusUm = 3.0;
inline constexpr double kBackgroundRadiusUm = 20.0;

using tracking::Point2;

struct QualityReport {
  std::string patch_id;
  int n_cells = 0;
  std::optional<double> snr;
  std::vector<std::optional<double>> per_frame_snr;
};

inline int count_cells(const std::vector<Track>& tracks) { return static_cast<int>(tracks.size()); }

enum class PixelClass { foreground, background, neither };

inline PixelClass classify_pixel(int x, int y, const std::vector<Point2>& centroids,
                                 double pixel_size_um) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centroids) best = std::min(best, std::hypot(x - c.x, y - c.y));
  const double d_um = best * pixel_size_um;
  if (d_um < kForegroundRadiusUm) return PixelClass::foreground;
  if (d_um > kBackgroundRadiusUm) return PixelClass::background;
  return PixelClass::neither;
}

// |mean(FG) - mean(BG)| / std(BG) with population std. Absent when either
// set is empty or the background is flat. Intensities are taken relative to
// the first pixel, so integer offsets leave the result bit-identical.
inline std::optional<double> frame_snr(const Image& frame, const std::vector<Point2>& centroids,
                                       double pixel_size_um) {
  if (!(pixel_size_um > 0.0)) throw Error(ErrorKind::range, "pixel size must be > 0");
  if (centroids.empty() || frame.size() == 0) return std::nullopt;
  const double ref = frame.pixels().front();
  double fg_sum = 0.0, bg_sum = 0.0;
  std::size_t fg_n = 0;
  std::vector<double> bg;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const double v = frame.at(x, y) - ref;
      switch (classify_pixel(x, y, centroids, pixel_size_um)) {
        case PixelClass::foreground:
          fg_sum += v;
          ++fg_n;
          break;
        case PixelClass::background:
          bg_sum += v;
          bg.push_back(v);
          break;
        case PixelClass::neither:
          break;
      }
    }
  }
  if (fg_n == 0 || bg.empty()) return std::nullopt;
  const double fg_mean = fg_sum / static_cast<double>(fg_n);
  const double bg_mean = bg_sum / static_cast<double>(bg.size());
  double ss = 0.0;
  for (double v : bg) ss += (v - bg_mean) * (v - bg_mean);
  const double sd = std::sqrt(ss / static_cast<double>(bg.size()));
  if (!(sd > 0.0)) return std::nullopt;
  return std::abs(fg_mean - bg_mean) / sd;
}

inline std::vector<Point2> centroids_at(const std::vector<Track>& tracks, int frame) {
  std::vector<Point2> out;
  for (const auto& tr : tracks) {
    if (const auto* p = tr.at_frame(frame)) out.push_back({p->x, p->y});
  }
  return out;
}

// Mean of the frames whose SNR is defined.
inline QualityReport patch_snr(const VideoPatch& patch, const std::vector<Track>& tracks) {
  QualityReport r;
  r.patch_id = patch.id;
  r.n_cells = count_cells(tracks);
  double sum = 0.0;
  int n = 0;
  for (int f = 0; f < static_cast<int>(patch.frames.size()); ++f) {
    auto s = frame_snr(patch.frames[f], centroids_at(tracks, f), patch.pixel_size_um);
    r.per_frame_snr.push_back(s);
    if (s) {
      sum += *s;
      ++n;
    }
  }
  if (n > 0) r.snr = sum / n;
  return r;
}

}  // namespace cbvcc::quality
