#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbvcc/types.hpp"

namespace cbvcc::tracking {

struct DetectionParams {
  double sigma_min_px = 2.0;
  double sigma_max_px = 6.0;
  int n_sigma = 5;
  double log_threshold = 0.05;
  double noise_floor_cutoff = 20.0;
  double noise_sigma = 5.0;

  void validate() const {
    if (!(sigma_min_px > 0.0 && sigma_min_px < sigma_max_px)) {
      throw Error(ErrorKind::config, "detection requires 0 < sigma_min < sigma_max");
    }
    if (n_sigma < 1) throw Error(ErrorKind::config, "detection requires n_sigma >= 1");
    if (!(log_threshold > 0.0)) throw Error(ErrorKind::config, "log_threshold must be > 0");
  }

  std::vector<double> sigmas() const {
    std::vector<double> s(static_cast<std::size_t>(n_sigma));
    if (n_sigma == 1) {
      s[0] = sigma_min_px;
      return s;
    }
    for (int k = 0; k < n_sigma; ++k) {
      s[k] = sigma_min_px + (sigma_max_px - sigma_min_px) * k / (n_sigma - 1);
    }
    return s;
  }
};

struct Blob {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
  double response = 0.0;
};

namespace detail {

// Mirror-with-edge-repeat boundary: d c b a | a b c d | d c b a.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Sampled Gaussian (order 0) or its second derivative (order 2), with the
// zeroth-order weights normalized to unit sum.
inline std::vector<double> gaussian_kernel(double sigma, int order) {
  const int radius = static_cast<int>(4.0 * sigma + 0.5);
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  const double s2 = sigma * sigma;
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / s2);
    sum += k[i + radius];
  }
  for (int i = -radius; i <= radius; ++i) {
    double& w = k[i + radius];
    w /= sum;
    if (order == 2) w *= (i * i / (s2 * s2) - 1.0 / s2);
  }
  return k;
}

inline Image convolve_rows(const Image& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = in.width();
  Image out(w, in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) acc += k[j + r] * in.at(reflect_index(x - j, w), y);
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline Image convolve_cols(const Image& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int h = in.height();
  Image out(in.width(), h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) acc += k[j + r] * in.at(x, reflect_index(y - j, h));
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), in [-0.5, 0.5].
inline double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

}  // namespace detail

// Scale-normalized negative Laplacian of Gaussian, -sigma^2 * LoG(I).
inline Image log_response(const Image& normalized, double sigma) {
  const auto g0 = detail::gaussian_kernel(sigma, 0);
  const auto g2 = detail::gaussian_kernel(sigma, 2);
  auto xx = detail::convolve_cols(detail::convolve_rows(normalized, g2), g0);
  auto yy = detail::convolve_cols(detail::convolve_rows(normalized, g0), g2);
  Image out(normalized.width(), normalized.height());
  const double scale = -sigma * sigma;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pixels()[i] = scale * (xx.pixels()[i] + yy.pixels()[i]);
  }
  return out;
}

// Intensities are 8-bit scale; detection works on I / kIntensityFullScale so
// the response threshold has the same meaning for every frame.
inline constexpr double kIntensityFullScale = 255.0;

// Bright-blob detector over a linear sigma grid. Peaks are 3x3x3 scale-space
// maxima at or above the threshold, refined by per-axis parabolic
// interpolation; overlapping peaks (centre distance < sqrt(2) * max sigma)
// keep only the stronger one.
inline std::vector<Blob> detect_blobs(const Image& frame, const DetectionParams& params) {
  params.validate();
  const int w = frame.width();
  const int h = frame.height();
  if (w == 0 || h == 0) return {};
  const auto [mn_it, mx_it] = std::minmax_element(frame.pixels().begin(), frame.pixels().end());
  if (!(*mx_it > *mn_it)) return {};

  Image norm(w, h);
  for (std::size_t i = 0; i < norm.size(); ++i) norm.pixels()[i] = frame.pixels()[i] / kIntensityFullScale;

  const auto sigmas = params.sigmas();
  const int ns = static_cast<int>(sigmas.size());
  std::vector<Image> stack;
  stack.reserve(sigmas.size());
  for (double s : sigmas) stack.push_back(log_response(norm, s));

  std::vector<Blob> candidates;
  for (int k = 0; k < ns; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = stack[k].at(x, y);
        if (v < params.log_threshold) continue;
        bool is_max = true;
        for (int dk = -1; dk <= 1 && is_max; ++dk) {
          const int kk = k + dk;
          if (kk < 0 || kk >= ns) continue;
          for (int dy = -1; dy <= 1 && is_max; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = x + dx;
              if (xx < 0 || xx >= w || (dk == 0 && dy == 0 && dx == 0)) continue;
              if (stack[kk].at(xx, yy) > v) {
                is_max = false;
                break;
              }
            }
          }
        }
        if (!is_max) continue;

        const auto& r = stack[k];
        double ox = 0.0, oy = 0.0, os = 0.0;
        if (x > 0 && x < w - 1) ox = detail::parabolic_offset(r.at(x - 1, y), v, r.at(x + 1, y));
        if (y > 0 && y < h - 1) oy = detail::parabolic_offset(r.at(x, y - 1), v, r.at(x, y + 1));
        if (k > 0 && k < ns - 1) {
          os = detail::parabolic_offset(stack[k - 1].at(x, y), v, stack[k + 1].at(x, y));
        }
        double sigma = sigmas[k];
        if (os > 0.0) sigma += os * (sigmas[k + 1] - sigmas[k]);
        if (os < 0.0) sigma += os * (sigmas[k] - sigmas[k - 1]);
        candidates.push_back({x + ox, y + oy, sigma, v});
      }
    }
  }

  // Stable: equal responses keep scan order (scale, row, column).
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Blob& a, const Blob& b) { return a.response > b.response; });
  std::vector<Blob> kept;
  for (const auto& c : candidates) {
    bool overlaps = false;
    for (const auto& k : kept) {
      const double limit = std::sqrt(2.0) * std::max(c.sigma, k.sigma);
      if (std::hypot(c.x - k.x, c.y - k.y) < limit) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(c);
  }
  return kept;
}

}  // namespace cbvcc::tracking
