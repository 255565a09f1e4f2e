#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cbvcc {

// Patch geometry shared by every stage.
inline constexpr int kFramesPerPatch = 20;
inline constexpr int kPatchSize = 50;
inline constexpr int kMidFrame = 10;
inline constexpr double kPatchCenter = 25.0;

enum class ErrorKind {
  format,
  shape,
  range,
  duplicate,
  too_short,
  degenerate,
  infeasible,
  config,
  numeric,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::shape: return "shape";
    case ErrorKind::range: return "range";
    case ErrorKind::duplicate: return "duplicate";
    case ErrorKind::too_short: return "too_short";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::config: return "config";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Row-major single-channel image; x is the column index, y the row index.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double& at(int x, int y) { return pixels_[index(x, y)]; }
  double at(int x, int y) const { return pixels_[index(x, y)]; }

  std::vector<double>& pixels() noexcept { return pixels_; }
  const std::vector<double>& pixels() const noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

enum class Split { train, validation, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s == "train") return Split::train;
  if (s == "validation" || s == "val") return Split::validation;
  if (s == "test") return Split::test;
  throw Error(ErrorKind::format, "unknown split '" + std::string(s) + "'");
}

struct VideoPatch {
  std::string id;
  std::vector<Image> frames;
  double pixel_size_um = 0.8;
  double frame_interval_s = 60.0;
  std::optional<int> label;
  std::string group_id;
  std::optional<Split> split;

  // Throws shape/range errors when the patch violates its invariants.
  void validate() const {
    if (static_cast<int>(frames.size()) != kFramesPerPatch) {
      throw Error(ErrorKind::shape,
                  "patch '" + id + "' has " + std::to_string(frames.size()) +
                      " frames, expected " + std::to_string(kFramesPerPatch));
    }
    for (const auto& f : frames) {
      if (f.width() != kPatchSize || f.height() != kPatchSize) {
        throw Error(ErrorKind::shape,
                    "patch '" + id + "' frame is " + std::to_string(f.width()) +
                        "x" + std::to_string(f.height()) + ", expected 50x50");
      }
      for (double v : f.pixels()) {
        if (!(v >= 0.0 && v <= 255.0)) {
          throw Error(ErrorKind::range, "patch '" + id + "' intensity out of [0, 255]");
        }
      }
    }
    if (!(pixel_size_um > 0.0) || !(frame_interval_s > 0.0)) {
      throw Error(ErrorKind::range, "patch '" + id + "' has non-positive pixel size or interval");
    }
    if (label && *label != 0 && *label != 1) {
      throw Error(ErrorKind::range, "patch '" + id + "' label must be 0 or 1");
    }
  }
};

struct TrackPoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const TrackPoint&) const = default;
};

enum class TrackSource { manual, automated, interpolated };

struct Track {
  int track_id = 0;
  std::vector<TrackPoint> points;
  TrackSource source = TrackSource::manual;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  int t_min() const { return points.front().frame; }
  int t_max() const { return points.back().frame; }

  const TrackPoint* at_frame(int frame) const {
    for (const auto& p : points) {
      if (p.frame == frame) return &p;
      if (p.frame > frame) break;
    }
    return nullptr;
  }

  bool has_gaps() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].frame != points[i - 1].frame + 1) return true;
    }
    return false;
  }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
        throw Error(ErrorKind::range, "track " + std::to_string(track_id) + " has non-finite coordinate");
      }
      if (i > 0 && points[i].frame <= points[i - 1].frame) {
        throw Error(ErrorKind::range, "track " + std::to_string(track_id) + " frames not strictly increasing");
      }
    }
    if (source == TrackSource::interpolated && has_gaps()) {
      throw Error(ErrorKind::range, "interpolated track " + std::to_string(track_id) + " has gaps");
    }
  }

  bool operator==(const Track&) const = default;
};

struct ManifestEntry {
  std::string patch_id;
  std::string path;
  std::optional<int> label;
  std::string group_id;
  std::optional<Split> split;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::optional<std::string> track_dir;

  const ManifestEntry* find(std::string_view patch_id) const {
    for (const auto& e : entries) {
      if (e.patch_id == patch_id) return &e;
    }
    return nullptr;
  }
};

struct Prediction {
  std::string patch_id;
  double prob_class1 = 0.5;
  int pred_label = 0;
  bool operator==(const Prediction&) const = default;
};

}  // namespace cbvcc
