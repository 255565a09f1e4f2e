#pragma once

// Synthetic labelled patches with known ground truth: Gaussian-spot cells on a
// noisy background following scripted motions (turn at the middle frame for
// class 1; straight, stationary, or empty for class 0).

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cbvcc/annotation.hpp"
#include "cbvcc/csv.hpp"
#include "cbvcc/io.hpp"
#include "cbvcc/parallel.hpp"
#include "cbvcc/quality.hpp"
#include "cbvcc/seed.hpp"
#include "cbvcc/tracking/track_processing.hpp"
#include "cbvcc/types.hpp"

namespace cbvcc::synth {

using annotation::Category;

struct SynthParams {
  int n_patches = 600;
  double class_mix = 0.4;
  double snr_min = 2.0;
  double snr_max = 12.0;
  int cells_min = 1;
  int cells_max = 4;
  std::uint64_t seed = 0;
  // Patches per simulated source video.
  int patches_per_group = 10;
  // Probability that a patch is padded with 1-4 black frames at one end.
  double pad_prob = 0.1;
  double cell_sigma_px = 4.0;
  double min_speed = 1.2;
  double max_speed = 1.8;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::config, "synth: " + m); };
    if (n_patches <= 0) fail("n_patches must be positive");
    if (!(class_mix >= 0.0 && class_mix <= 1.0)) fail("class_mix must lie in [0, 1]");
    if (!(snr_min > 0.0 && snr_min <= snr_max)) fail("need 0 < snr_min <= snr_max");
    if (cells_min < 0 || cells_min > cells_max) fail("need 0 <= cells_min <= cells_max");
    if (patches_per_group <= 0) fail("patches_per_group must be positive");
    if (!(pad_prob >= 0.0 && pad_prob <= 1.0)) fail("pad_prob must lie in [0, 1]");
    if (!(cell_sigma_px > 0.0) || !(min_speed > 0.0 && min_speed <= max_speed)) {
      fail("cell size and speeds must be positive");
    }
    // Geometry: every cell must stay inside the patch and apart from the others.
    if (cells_max > 5) {
      throw Error(ErrorKind::range, "synth: at most 5 separated cells fit in a 50x50 patch");
    }
    // Focus stays within centre jitter (1.5) plus ten steps of the 2 px margin.
    if (max_speed * kMidFrame + 1.5 > kPatchCenter - 3.0) {
      throw Error(ErrorKind::range, "synth: max_speed moves the focus cell out of the patch");
    }
    if (class_mix > 0.0 && cells_max < 1) {
      throw Error(ErrorKind::range, "synth: class 1 patches need at least one cell");
    }
  }
};

struct SynthPatch {
  VideoPatch patch;
  std::vector<Track> tracks;  // ground truth, focus cell first
  Category category = Category::Class0Background;
  double snr_target = 0.0;
  std::optional<double> snr_realized;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline std::normal_distribution<double>::result_type gauss(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  return d(rng);
}

struct Path {
  std::vector<double> x, y;  // one entry per frame
};

inline Path focus_path(std::mt19937_64& rng, Category cat, const SynthParams& p) {
  Path path;
  path.x.resize(kFramesPerPatch);
  path.y.resize(kFramesPerPatch);
  const double cx = kPatchCenter + uniform(rng, -1.5, 1.5);
  const double cy = kPatchCenter + uniform(rng, -1.5, 1.5);
  if (cat == Category::Class0Stationary) {
    const double drift = uniform(rng, 0.0, 0.08);
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < kFramesPerPatch; ++t) {
      path.x[t] = cx + drift * (t - kMidFrame) * std::cos(heading) + gauss(rng, 0.45);
      path.y[t] = cy + drift * (t - kMidFrame) * std::sin(heading) + gauss(rng, 0.45);
    }
    return path;
  }
  const double speed = uniform(rng, p.min_speed, p.max_speed);
  const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  double turn_deg = cat == Category::Class1Turn ? uniform(rng, 110.0, 170.0) : uniform(rng, 0.0, 30.0);
  if (rng() & 1) turn_deg = -turn_deg;
  const double after = heading + turn_deg * std::numbers::pi / 180.0;
  for (int t = 0; t < kFramesPerPatch; ++t) {
    const double h = t < kMidFrame ? heading : after;
    const double dt = t - kMidFrame;
    path.x[t] = cx + speed * dt * std::cos(h) + gauss(rng, 0.15);
    path.y[t] = cy + speed * dt * std::sin(h) + gauss(rng, 0.15);
  }
  return path;
}

inline bool inside(const Path& path, double margin) {
  for (int t = 0; t < kFramesPerPatch; ++t) {
    if (path.x[t] < margin || path.x[t] > kPatchSize - 1 - margin) return false;
    if (path.y[t] < margin || path.y[t] > kPatchSize - 1 - margin) return false;
  }
  return true;
}

inline Path distractor_path(std::mt19937_64& rng) {
  Path path;
  path.x.resize(kFramesPerPatch);
  path.y.resize(kFramesPerPatch);
  const double r = uniform(rng, 16.0, 22.0);
  const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double cx = kPatchCenter + r * std::cos(phi);
  const double cy = kPatchCenter + r * std::sin(phi);
  const bool moving = rng() & 1;
  const double speed = moving ? uniform(rng, 0.3, 0.8) : 0.0;
  const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  for (int t = 0; t < kFramesPerPatch; ++t) {
    const double dt = t - kMidFrame;
    path.x[t] = cx + speed * dt * std::cos(heading) + gauss(rng, 0.3);
    path.y[t] = cy + speed * dt * std::sin(heading) + gauss(rng, 0.3);
  }
  return path;
}

inline double min_separation(const Path& a, const Path& b) {
  double m = std::numeric_limits<double>::infinity();
  for (int t = 0; t < kFramesPerPatch; ++t) m = std::min(m, std::hypot(a.x[t] - b.x[t], a.y[t] - b.y[t]));
  return m;
}

// Mean spot profile over the foreground disc, for a centroid on a pixel.
inline double foreground_gain(double sigma, double pixel_size_um) {
  const double radius_px = quality::kForegroundRadiusUm / pixel_size_um;
  double sum = 0.0;
  int n = 0;
  const int r = static_cast<int>(std::ceil(radius_px));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double d = std::hypot(dx, dy);
      if (d < radius_px) {
        sum += std::exp(-(d * d) / (2.0 * sigma * sigma));
        ++n;
      }
    }
  }
  return sum / n;
}

inline std::string patch_id(int index, int n) {
  const int width = std::max(4, static_cast<int>(std::to_string(n - 1).size()));
  std::string s = std::to_string(index);
  return "s" + std::string(static_cast<std::size_t>(width) - s.size(), '0') + s;
}

// Deterministic partition helpers: a seeded permutation of [0, n).
inline std::vector<int> permutation(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

}  // namespace detail

// Category plan for the whole dataset: round(n * mix) class 1 patches; the
// class 0 remainder cycles straight / stationary / background. Patches that
// would need a cell when cells_max = 0 are background.
inline std::vector<Category> plan_categories(const SynthParams& p) {
  const int n1 = static_cast<int>(std::lround(p.n_patches * p.class_mix));
  const auto order = detail::permutation(p.n_patches, derive_seed(p.seed, "categories"));
  std::vector<Category> cats(static_cast<std::size_t>(p.n_patches), Category::Class0Background);
  int zero = 0;
  for (int k = 0; k < p.n_patches; ++k) {
    const int i = order[k];
    if (k < n1) {
      cats[i] = Category::Class1Turn;
      continue;
    }
    static constexpr Category cycle[] = {Category::Class0Straight, Category::Class0Stationary,
                                         Category::Class0Background};
    cats[i] = p.cells_max == 0 ? Category::Class0Background : cycle[zero++ % 3];
  }
  return cats;
}

inline std::vector<Split> plan_splits(int n, std::uint64_t seed) {
  const auto order = detail::permutation(n, derive_seed(seed, "splits"));
  const int n_train = static_cast<int>(std::lround(n * 0.7));
  const int n_val = static_cast<int>(std::lround(n * 0.1));
  std::vector<Split> s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    s[order[k]] = k < n_train ? Split::train : (k < n_train + n_val ? Split::validation : Split::test);
  }
  return s;
}

inline SynthPatch generate_patch(const SynthParams& p, int index, Category cat, Split split) {
  SynthPatch out;
  out.category = cat;
  auto& patch = out.patch;
  patch.id = detail::patch_id(index, p.n_patches);
  const int group = index / p.patches_per_group;
  patch.group_id = "v" + std::to_string(group);
  patch.label = cat == Category::Class1Turn ? 1 : 0;
  patch.split = split;

  std::mt19937_64 grng(derive_seed(p.seed, "group:" + patch.group_id));
  const double background = detail::uniform(grng, 30.0, 50.0);
  const double noise_sd = detail::uniform(grng, 6.0, 10.0);

  std::mt19937_64 rng(derive_seed(p.seed, patch.id));
  out.snr_target = detail::uniform(rng, p.snr_min, p.snr_max);
  int n_cells = 0;
  if (cat != Category::Class0Background) {
    n_cells = std::max(1, p.cells_min + static_cast<int>(rng() % static_cast<std::uint64_t>(p.cells_max - p.cells_min + 1)));
  }

  int pad_start = 0, pad_end = 0;
  if (detail::uniform(rng, 0.0, 1.0) < p.pad_prob) {
    const int k = 1 + static_cast<int>(rng() % 4);
    (rng() & 1 ? pad_start : pad_end) = k;
  }
  auto visible = [&](int t) { return t >= pad_start && t < kFramesPerPatch - pad_end; };

  std::vector<detail::Path> paths;
  std::vector<double> sigmas;
  const double margin = 2.0;
  if (n_cells > 0) {
    // Rejection-sample the focus motion until the annotation rules agree.
    bool ok = false;
    for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
      auto path = detail::focus_path(rng, cat, p);
      if (!detail::inside(path, margin)) continue;
      Track tr;
      for (int t = 0; t < kFramesPerPatch; ++t) {
        if (visible(t)) tr.points.push_back({t, path.x[t], path.y[t]});
      }
      if (annotation::annotate(tr).category != cat) continue;
      paths.push_back(std::move(path));
      ok = true;
    }
    if (!ok) throw Error(ErrorKind::range, "synth: could not place focus cell for " + patch.id);
    for (int c = 1; c < n_cells; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        auto path = detail::distractor_path(rng);
        if (!detail::inside(path, margin)) continue;
        bool apart = true;
        for (const auto& other : paths) apart = apart && detail::min_separation(path, other) >= 14.0;
        if (!apart) continue;
        paths.push_back(std::move(path));
        placed = true;
      }
      if (!placed) throw Error(ErrorKind::range, "synth: cannot fit " + std::to_string(n_cells) + " cells in " + patch.id);
    }
    for (int c = 0; c < n_cells; ++c) sigmas.push_back(p.cell_sigma_px * detail::uniform(rng, 0.9, 1.1));
  }

  const double gain = detail::foreground_gain(sigmas.empty() ? p.cell_sigma_px : sigmas.front(), patch.pixel_size_um);
  const double amplitude = out.snr_target * noise_sd / gain;

  patch.frames.reserve(kFramesPerPatch);
  for (int t = 0; t < kFramesPerPatch; ++t) {
    Image img(kPatchSize, kPatchSize, 0.0);
    if (visible(t)) {
      for (int y = 0; y < kPatchSize; ++y) {
        for (int x = 0; x < kPatchSize; ++x) {
          double v = background + detail::gauss(rng, noise_sd);
          for (std::size_t c = 0; c < paths.size(); ++c) {
            const double dx = x - paths[c].x[t], dy = y - paths[c].y[t];
            v += amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigmas[c] * sigmas[c]));
          }
          img.at(x, y) = std::clamp(std::round(v), 0.0, 255.0);
        }
      }
    }
    patch.frames.push_back(std::move(img));
  }

  for (std::size_t c = 0; c < paths.size(); ++c) {
    Track tr;
    tr.track_id = static_cast<int>(c) + 1;
    tr.source = TrackSource::manual;
    for (int t = 0; t < kFramesPerPatch; ++t) {
      if (visible(t)) tr.points.push_back({t, paths[c].x[t], paths[c].y[t]});
    }
    out.tracks.push_back(std::move(tr));
  }
  out.snr_realized = quality::patch_snr(patch, out.tracks).snr;
  return out;
}

inline std::vector<SynthPatch> generate_dataset(const SynthParams& p, int jobs = 1) {
  p.validate();
  const auto cats = plan_categories(p);
  const auto splits = plan_splits(p.n_patches, p.seed);
  std::vector<SynthPatch> out(static_cast<std::size_t>(p.n_patches));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = generate_patch(p, static_cast<int>(i), cats[i], splits[i]);
  });
  return out;
}

// Layout: <dir>/manifest.csv, <dir>/patches/<id>.tif, <dir>/tracks/<id>.csv
// and <dir>/synth_truth.csv. Manifest paths are relative to <dir>.
inline void write_dataset(const std::string& dir, const std::vector<SynthPatch>& data, int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "patches");
  fs::create_directories(fs::path(dir) / "tracks");
  DatasetManifest manifest;
  std::string truth = "patch_id,category,n_cells,snr_target,snr_realized\n";
  for (const auto& s : data) {
    manifest.entries.push_back({s.patch.id, "patches/" + s.patch.id + ".tif", s.patch.label,
                                s.patch.group_id, s.patch.split});
    truth += s.patch.id + ',' + std::string(annotation::to_string(s.category)) + ',' +
             std::to_string(s.tracks.size()) + ',' + csv::format_roundtrip(s.snr_target) + ',' +
             csv::format_optional(s.snr_realized) + '\n';
  }
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const auto& s = data[i];
    save_patch((fs::path(dir) / "patches" / (s.patch.id + ".tif")).string(), s.patch);
    save_tracks((fs::path(dir) / "tracks" / (s.patch.id + ".csv")).string(), s.tracks);
  });
  save_manifest((fs::path(dir) / "manifest.csv").string(), manifest);
  csv::write_file((fs::path(dir) / "synth_truth.csv").string(), truth);
}

}  // namespace cbvcc::synth
