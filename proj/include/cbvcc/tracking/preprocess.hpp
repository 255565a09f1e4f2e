#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

// Linear-interpolated quantile of the distinct values (numpy's default rule).
inline double unique_quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, values.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Fills dark pixels (<= cutoff) with the 20% quantile of the frame's unique
// intensities plus N(0, noise_sigma) noise, clamped to [0, 255]. Brighter
// pixels pass through untouched.
inline Image preprocess_intensity(const Image& frame, double cutoff, double noise_sigma,
                                  std::uint64_t rng_seed) {
  if (!(cutoff >= 0.0 && cutoff <= 255.0)) {
    throw Error(ErrorKind::range, "noise floor cutoff must lie in [0, 255]");
  }
  const double q20 = unique_quantile(frame.pixels(), 0.2);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  Image out = frame;
  for (double& v : out.pixels()) {
    if (v > cutoff) continue;
    double eps = noise_sigma > 0.0 ? noise(rng) : 0.0;
    v = std::clamp(q20 + eps, 0.0, 255.0);
  }
  return out;
}

}  // namespace cbvcc::tracking
