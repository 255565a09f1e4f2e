#pragma once

// File formats shared by every command:
//   patches      multi-page 8-bit TIFF, 1 or 3 channels (green used for RGB)
//   manifest.csv patch_id,path,label,group_id,split
//   tracks/*.csv track_id,frame,x_px,y_px
//   predictions  patch_id,prob_class1,pred_label

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cbvcc/csv.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc {

namespace detail {

inline Image page_to_image(const cv::Mat& page, const std::string& path) {
  if (page.depth() != CV_8U) {
    throw Error(ErrorKind::format, path + ": only 8-bit pages are supported");
  }
  cv::Mat plane;
  switch (page.channels()) {
    case 1: plane = page; break;
    case 3:
    case 4:
      // OpenCV stores colour pages as BGR(A); green is channel 1 either way.
      cv::extractChannel(page, plane, 1);
      break;
    default:
      throw Error(ErrorKind::format, path + ": unsupported channel count " +
                                         std::to_string(page.channels()));
  }
  Image img(plane.cols, plane.rows);
  for (int y = 0; y < plane.rows; ++y) {
    const auto* row = plane.ptr<unsigned char>(y);
    for (int x = 0; x < plane.cols; ++x) img.at(x, y) = row[x];
  }
  return img;
}

}  // namespace detail

// Reads a multi-page TIFF stack. The id defaults to the file stem; metadata
// (label, group, split) comes from the manifest and is filled by the caller.
inline VideoPatch load_patch(const std::string& path) {
  std::vector<cv::Mat> pages;
  bool ok = false;
  try {
    ok = std::filesystem::exists(path) && cv::imreadmulti(path, pages, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  if (!ok || pages.empty()) throw Error(ErrorKind::format, path + ": not a readable image stack");

  VideoPatch patch;
  patch.id = std::filesystem::path(path).stem().string();
  patch.frames.reserve(pages.size());
  for (const auto& page : pages) patch.frames.push_back(detail::page_to_image(page, path));
  if (static_cast<int>(patch.frames.size()) != kFramesPerPatch) {
    const auto& f = patch.frames.front();
    throw Error(ErrorKind::shape, path + ": stack is " + std::to_string(patch.frames.size()) +
                                      " x " + std::to_string(f.height()) + " x " +
                                      std::to_string(f.width()) + ", expected 20 x 50 x 50 (got " +
                                      std::to_string(patch.frames.size()) + " frames)");
  }
  patch.validate();
  return patch;
}

// Writes frames as 8-bit single-channel pages (values rounded and clamped).
inline void save_patch(const std::string& path, const VideoPatch& patch) {
  std::vector<cv::Mat> pages;
  pages.reserve(patch.frames.size());
  for (const auto& f : patch.frames) {
    cv::Mat m(f.height(), f.width(), CV_8UC1);
    for (int y = 0; y < f.height(); ++y) {
      auto* row = m.ptr<unsigned char>(y);
      for (int x = 0; x < f.width(); ++x) {
        row[x] = static_cast<unsigned char>(std::clamp(std::lround(f.at(x, y)), 0L, 255L));
      }
    }
    pages.push_back(std::move(m));
  }
  bool ok = false;
  try {
    ok = cv::imwritemulti(path, pages);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  if (!ok) throw Error(ErrorKind::format, "cannot write patch '" + path + "'");
}

inline std::vector<Track> load_tracks(const std::string& path) {
  auto t = csv::read_file(path);
  auto c_id = t.require_column("track_id", path);
  auto c_frame = t.require_column("frame", path);
  auto c_x = t.require_column("x_px", path);
  auto c_y = t.require_column("y_px", path);

  std::map<long long, Track> by_id;
  std::set<std::pair<long long, long long>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::string ctx = path + ":" + std::to_string(r + 2);
    auto id = csv::parse_int(row[c_id], ctx);
    auto frame = csv::parse_int(row[c_frame], ctx);
    if (frame < 0 || frame >= kFramesPerPatch) {
      throw Error(ErrorKind::range, ctx + ": frame " + std::to_string(frame) + " outside [0, 19]");
    }
    if (!seen.emplace(id, frame).second) {
      throw Error(ErrorKind::duplicate, ctx + ": duplicate row for track " + std::to_string(id) +
                                            " frame " + std::to_string(frame));
    }
    TrackPoint p{static_cast<int>(frame), csv::parse_double(row[c_x], ctx),
                 csv::parse_double(row[c_y], ctx)};
    auto& track = by_id[id];
    track.track_id = static_cast<int>(id);
    track.source = TrackSource::manual;
    track.points.push_back(p);
  }

  std::vector<Track> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, track] : by_id) {
    std::sort(track.points.begin(), track.points.end(),
              [](const TrackPoint& a, const TrackPoint& b) { return a.frame < b.frame; });
    track.validate();
    tracks.push_back(std::move(track));
  }
  return tracks;
}

inline std::string format_tracks(const std::vector<Track>& tracks) {
  std::string out = "track_id,frame,x_px,y_px\n";
  for (const auto& tr : tracks) {
    for (const auto& p : tr.points) {
      out += std::to_string(tr.track_id) + ',' + std::to_string(p.frame) + ',' +
             csv::format_roundtrip(p.x) + ',' + csv::format_roundtrip(p.y) + '\n';
    }
  }
  return out;
}

inline void save_tracks(const std::string& path, const std::vector<Track>& tracks) {
  csv::write_file(path, format_tracks(tracks));
}

inline std::string format_predictions(const std::vector<Prediction>& preds) {
  std::set<std::string> ids;
  for (const auto& p : preds) {
    if (!ids.insert(p.patch_id).second) {
      throw Error(ErrorKind::duplicate, "duplicate prediction for patch '" + p.patch_id + "'");
    }
    if (!std::isfinite(p.prob_class1) || p.prob_class1 < 0.0 || p.prob_class1 > 1.0) {
      throw Error(ErrorKind::range, "probability for '" + p.patch_id + "' outside [0, 1]");
    }
  }
  std::string out = "patch_id,prob_class1,pred_label\n";
  for (const auto& p : preds) {
    out += p.patch_id + ',' + csv::format_fixed(p.prob_class1, 6) + ',' +
           std::to_string(p.pred_label) + '\n';
  }
  return out;
}

// Probabilities are written with 6 decimals; the duplicate check runs before
// anything touches the file.
inline void save_predictions(const std::vector<Prediction>& preds, const std::string& path) {
  csv::write_file(path, format_predictions(preds));
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  auto t = csv::read_file(path);
  auto c_id = t.require_column("patch_id", path);
  auto c_p = t.require_column("prob_class1", path);
  auto c_l = t.require_column("pred_label", path);
  std::vector<Prediction> preds;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::string ctx = path + ":" + std::to_string(r + 2);
    Prediction p{row[c_id], csv::parse_double(row[c_p], ctx),
                 static_cast<int>(csv::parse_int(row[c_l], ctx))};
    if (!ids.insert(p.patch_id).second) {
      throw Error(ErrorKind::duplicate, ctx + ": duplicate patch_id '" + p.patch_id + "'");
    }
    if (p.prob_class1 < 0.0 || p.prob_class1 > 1.0 || (p.pred_label != 0 && p.pred_label != 1)) {
      throw Error(ErrorKind::range, ctx + ": prediction out of range");
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

inline DatasetManifest load_manifest(const std::string& path) {
  auto t = csv::read_file(path);
  auto c_id = t.require_column("patch_id", path);
  auto c_path = t.require_column("path", path);
  auto c_label = t.require_column("label", path);
  auto c_group = t.require_column("group_id", path);
  auto c_split = t.require_column("split", path);
  DatasetManifest m;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::string ctx = path + ":" + std::to_string(r + 2);
    ManifestEntry e;
    e.patch_id = row[c_id];
    e.path = row[c_path];
    if (!row[c_label].empty()) {
      auto l = csv::parse_int(row[c_label], ctx);
      if (l != 0 && l != 1) throw Error(ErrorKind::range, ctx + ": label must be 0 or 1");
      e.label = static_cast<int>(l);
    }
    e.group_id = row[c_group];
    e.split = parse_split(row[c_split]);
    if (!ids.insert(e.patch_id).second) {
      throw Error(ErrorKind::duplicate, ctx + ": duplicate patch_id '" + e.patch_id + "'");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::string& path, const DatasetManifest& m) {
  std::string out = "patch_id,path,label,group_id,split\n";
  for (const auto& e : m.entries) {
    out += e.patch_id + ',' + e.path + ',' + (e.label ? std::to_string(*e.label) : "") + ',' +
           e.group_id + ',' + (e.split ? std::string(to_string(*e.split)) : "") + '\n';
  }
  csv::write_file(path, out);
}

// Tracks for a patch; a missing file means no tracks were recorded.
inline std::vector<Track> load_tracks_for(const std::string& track_dir, const std::string& patch_id) {
  auto p = std::filesystem::path(track_dir) / (patch_id + ".csv");
  if (!std::filesystem::exists(p)) return {};
  return load_tracks(p.string());
}

}  // namespace cbvcc
