#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbvcc/csv.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::features {

enum class FeatureSet { basic, all };

inline std::string_view to_string(FeatureSet s) { return s == FeatureSet::all ? "all" : "basic"; }

inline FeatureSet parse_feature_set(std::string_view s) {
  if (s == "all") return FeatureSet::all;
  if (s == "basic") return FeatureSet::basic;
  throw Error(ErrorKind::config, "feature set must be 'all' or 'basic', got '" + std::string(s) + "'");
}

// Offsets for the two bimodal features.
inline constexpr double kOutreachOffset = 0.55;
inline constexpr double kStraightnessOffset = 0.45;

// Values used when no focus cell is observed at the middle frame.
inline constexpr double kDefaultDCenter = 50.0;
inline constexpr double kDefaultDeltaTheta = 0.0;
inline constexpr double kDefaultSNorm = 2.0;

inline constexpr double kMissing = -1.0;

struct FeatureVector {
  double speed = 0.0;
  double mean_turning_angle = 0.0;
  double outreach_ratio_t = 0.0;
  double displacement_ratio = 0.0;
  double straightness_t = 0.0;
  double asphericity = 0.0;
  double displacement = 0.0;
  double n_coordinates = 0.0;
  double d_center = 0.0;
  // Absent when assembled for the basic set.
  std::optional<double> delta_theta;
  std::optional<double> s_norm;
  int track_missing = 0;

  bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::array<std::string_view, 12> kAllColumns = {
    "speed",        "mean_turning_angle", "outreach_ratio_t", "displacement_ratio",
    "straightness_t", "asphericity",      "displacement",     "n_coordinates",
    "d_center",     "delta_theta",        "s_norm",           "track_missing"};

inline std::vector<std::string> schema(FeatureSet set) {
  std::vector<std::string> out;
  for (auto c : kAllColumns) {
    if (set == FeatureSet::basic && (c == "delta_theta" || c == "s_norm")) continue;
    out.emplace_back(c);
  }
  return out;
}

// Value of a named column; throws when the column is absent from this vector.
inline double value_of(const FeatureVector& f, std::string_view name) {
  if (name == "speed") return f.speed;
  if (name == "mean_turning_angle") return f.mean_turning_angle;
  if (name == "outreach_ratio_t") return f.outreach_ratio_t;
  if (name == "displacement_ratio") return f.displacement_ratio;
  if (name == "straightness_t") return f.straightness_t;
  if (name == "asphericity") return f.asphericity;
  if (name == "displacement") return f.displacement;
  if (name == "n_coordinates") return f.n_coordinates;
  if (name == "d_center") return f.d_center;
  if (name == "track_missing") return f.track_missing;
  if (name == "delta_theta" || name == "s_norm") {
    const auto& v = name == "delta_theta" ? f.delta_theta : f.s_norm;
    if (!v) throw Error(ErrorKind::shape, "feature '" + std::string(name) + "' not computed for this row");
    return *v;
  }
  throw Error(ErrorKind::shape, "unknown feature '" + std::string(name) + "'");
}

inline std::vector<double> values(const FeatureVector& f, const std::vector<std::string>& cols) {
  std::vector<double> out;
  out.reserve(cols.size());
  for (const auto& c : cols) out.push_back(value_of(f, c));
  return out;
}

struct BasicFeatures {
  double displacement = 0.0;
  double path_length = 0.0;
  double speed = 0.0;
  double straightness_raw = 0.0;
  double outreach_raw = 0.0;
  double displacement_ratio = 0.0;
  double mean_turning_angle = 0.0;
  double asphericity = 0.0;
  int n_coordinates = 0;
};

// Angle in [0, pi] between two nonzero vectors.
inline double vector_angle(double ax, double ay, double bx, double by) {
  return std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
}

inline BasicFeatures basic_features(const Track& track) {
  if (track.size() < 3) {
    throw Error(ErrorKind::too_short, "track " + std::to_string(track.track_id) +
                                          " has fewer than 3 points");
  }
  const auto& pts = track.points;
  BasicFeatures f;
  f.n_coordinates = static_cast<int>(pts.size());
  const auto& first = pts.front();
  const auto& last = pts.back();
  f.displacement = std::hypot(last.x - first.x, last.y - first.y);

  double max_reach = 0.0;
  for (const auto& p : pts) max_reach = std::max(max_reach, std::hypot(p.x - first.x, p.y - first.y));

  std::vector<std::array<double, 2>> steps;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].x - pts[i - 1].x;
    const double dy = pts[i].y - pts[i - 1].y;
    f.path_length += std::hypot(dx, dy);
    if (dx != 0.0 || dy != 0.0) steps.push_back({dx, dy});
  }
  f.speed = f.path_length / (track.t_max() - track.t_min());
  if (f.path_length > 0.0) {
    f.straightness_raw = std::min(1.0, f.displacement / f.path_length);
    f.outreach_raw = std::min(1.0, max_reach / f.path_length);
  }
  if (max_reach > 0.0) f.displacement_ratio = std::min(1.0, f.displacement / max_reach);

  if (steps.size() >= 2) {
    double sum = 0.0;
    for (std::size_t i = 1; i < steps.size(); ++i) {
      sum += vector_angle(steps[i - 1][0], steps[i - 1][1], steps[i][0], steps[i][1]);
    }
    f.mean_turning_angle = sum / static_cast<double>(steps.size() - 1);
  }

  // Gyration tensor [a b; b c]; (l1 - l2)^2 = (a - c)^2 + 4 b^2, l1 + l2 = a + c.
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  const double n = static_cast<double>(pts.size());
  mx /= n;
  my /= n;
  double a = 0.0, b = 0.0, c = 0.0;
  for (const auto& p : pts) {
    a += (p.x - mx) * (p.x - mx);
    b += (p.x - mx) * (p.y - my);
    c += (p.y - my) * (p.y - my);
  }
  a /= n;
  b /= n;
  c /= n;
  const double trace = a + c;
  if (trace > 0.0) {
    f.asphericity = std::clamp(((a - c) * (a - c) + 4.0 * b * b) / (trace * trace), 0.0, 1.0);
  }
  return f;
}

inline double transform_bimodal(double raw, double b) { return std::abs(raw - b); }

struct Handcrafted {
  double delta_theta = kDefaultDeltaTheta;
  double s_norm = kDefaultSNorm;
  double d_center = kDefaultDCenter;
  bool defaulted = true;
};

// Direction-change features around the middle frame. Steps are indexed by
// their start frame; "before" holds start frames < t_mid.
inline Handcrafted handcrafted_features(const Track& track, int t_mid = kMidFrame) {
  Handcrafted out;
  const TrackPoint* mid = track.at_frame(t_mid);
  if (!mid) return out;

  double bx = 0.0, by = 0.0, ax = 0.0, ay = 0.0;
  double theta_b = 0.0, theta_a = 0.0;
  int nb = 0, na = 0;
  for (std::size_t i = 0; i + 1 < track.points.size(); ++i) {
    const auto& p = track.points[i];
    const auto& q = track.points[i + 1];
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    const double theta = std::atan2(dy, dx);
    if (p.frame < t_mid) {
      bx += dx;
      by += dy;
      theta_b += theta;
      ++nb;
    } else {
      ax += dx;
      ay += dy;
      theta_a += theta;
      ++na;
    }
  }
  if (nb == 0 || na == 0) return out;
  bx /= nb;
  by /= nb;
  ax /= na;
  ay /= na;
  const double nrm_b = std::hypot(bx, by);
  const double nrm_a = std::hypot(ax, ay);
  if (nrm_b == 0.0 || nrm_a == 0.0) return out;

  out.delta_theta = std::abs(theta_a / na - theta_b / nb);
  out.s_norm = std::clamp(std::hypot(bx / nrm_b + ax / nrm_a, by / nrm_b + ay / nrm_a), 0.0, 2.0);
  out.d_center = std::hypot(mid->x - kPatchCenter, mid->y - kPatchCenter);
  out.defaulted = false;
  return out;
}

inline FeatureVector missing_vector(FeatureSet set) {
  FeatureVector v;
  v.speed = v.mean_turning_angle = v.outreach_ratio_t = v.displacement_ratio = kMissing;
  v.straightness_t = v.asphericity = v.displacement = v.n_coordinates = v.d_center = kMissing;
  if (set == FeatureSet::all) {
    v.delta_theta = kMissing;
    v.s_norm = kMissing;
  }
  v.track_missing = 1;
  return v;
}

// Full vector for a selected (interpolated) track. Absent tracks, and tracks
// too short to describe a change of behaviour, become the missing vector.
inline FeatureVector assemble(const std::optional<Track>& track, FeatureSet set) {
  if (!track || track->size() < 3) return missing_vector(set);
  const auto basic = basic_features(*track);
  const auto hand = handcrafted_features(*track);
  FeatureVector v;
  v.speed = basic.speed;
  v.mean_turning_angle = basic.mean_turning_angle;
  v.outreach_ratio_t = transform_bimodal(basic.outreach_raw, kOutreachOffset);
  v.displacement_ratio = basic.displacement_ratio;
  v.straightness_t = transform_bimodal(basic.straightness_raw, kStraightnessOffset);
  v.asphericity = basic.asphericity;
  v.displacement = basic.displacement;
  v.n_coordinates = basic.n_coordinates;
  v.d_center = hand.d_center;
  if (set == FeatureSet::all) {
    v.delta_theta = hand.delta_theta;
    v.s_norm = hand.s_norm;
  }
  v.track_missing = 0;
  return v;
}

struct FeatureRow {
  std::string patch_id;
  FeatureVector features;
};

inline std::string format_features_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "patch_id";
  for (auto c : kAllColumns) {
    out += ',';
    out += c;
  }
  out += '\n';
  for (const auto& r : rows) {
    const auto& f = r.features;
    std::vector<std::string> fields = {
        r.patch_id,
        csv::format_roundtrip(f.speed),
        csv::format_roundtrip(f.mean_turning_angle),
        csv::format_roundtrip(f.outreach_ratio_t),
        csv::format_roundtrip(f.displacement_ratio),
        csv::format_roundtrip(f.straightness_t),
        csv::format_roundtrip(f.asphericity),
        csv::format_roundtrip(f.displacement),
        csv::format_roundtrip(f.n_coordinates),
        csv::format_roundtrip(f.d_center),
        csv::format_optional(f.delta_theta),
        csv::format_optional(f.s_norm),
        std::to_string(f.track_missing)};
    out += csv::join(fields) + '\n';
  }
  return out;
}

inline void save_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
  csv::write_file(path, format_features_csv(rows));
}

inline std::vector<FeatureRow> load_features_csv(const std::string& path) {
  auto t = csv::read_file(path);
  auto c_id = t.require_column("patch_id", path);
  std::vector<std::size_t> cols;
  for (auto c : kAllColumns) cols.push_back(t.require_column(c, path));
  std::vector<FeatureRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = path + ":" + std::to_string(r + 2);
    auto num = [&](std::size_t k) { return csv::parse_double(row[cols[k]], ctx); };
    auto opt = [&](std::size_t k) -> std::optional<double> {
      if (row[cols[k]].empty()) return std::nullopt;
      return num(k);
    };
    FeatureRow fr;
    fr.patch_id = row[c_id];
    auto& f = fr.features;
    f.speed = num(0);
    f.mean_turning_angle = num(1);
    f.outreach_ratio_t = num(2);
    f.displacement_ratio = num(3);
    f.straightness_t = num(4);
    f.asphericity = num(5);
    f.displacement = num(6);
    f.n_coordinates = num(7);
    f.d_center = num(8);
    f.delta_theta = opt(9);
    f.s_norm = opt(10);
    f.track_missing = static_cast<int>(csv::parse_int(row[cols[11]], ctx));
    rows.push_back(std::move(fr));
  }
  return rows;
}

}  // namespace cbvcc::features
