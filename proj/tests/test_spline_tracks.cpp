#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "cbvcc/tracking/spline.hpp"
#include "cbvcc/tracking/track_processing.hpp"
#include "test_util.hpp"

using namespace cbvcc;
using namespace cbvcc::tracking;

namespace {

// Independent natural-spline oracle: solves for the 4 polynomial
// coefficients of every segment directly (interpolation, C1 and C2
// continuity, zero curvature at both ends) with a dense LU.
double oracle_spline(const std::vector<double>& t, const std::vector<double>& y, double at) {
  const int segs = static_cast<int>(t.size()) - 1;
  const int n = 4 * segs;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  int row = 0;
  // Segment s: a + b u + c u^2 + d u^3 with u = t - t_s.
  for (int s = 0; s < segs; ++s) {
    const double h = t[s + 1] - t[s];
    A(row, 4 * s) = 1.0;
    b(row++) = y[s];
    A(row, 4 * s) = 1.0;
    A(row, 4 * s + 1) = h;
    A(row, 4 * s + 2) = h * h;
    A(row, 4 * s + 3) = h * h * h;
    b(row++) = y[s + 1];
    if (s + 1 < segs) {
      A(row, 4 * s + 1) = 1.0;
      A(row, 4 * s + 2) = 2.0 * h;
      A(row, 4 * s + 3) = 3.0 * h * h;
      A(row++, 4 * (s + 1) + 1) = -1.0;
      A(row, 4 * s + 2) = 2.0;
      A(row, 4 * s + 3) = 6.0 * h;
      A(row++, 4 * (s + 1) + 2) = -2.0;
    }
  }
  A(row++, 2) = 2.0;
  const double hl = t[segs] - t[segs - 1];
  A(row, 4 * (segs - 1) + 2) = 2.0;
  A(row++, 4 * (segs - 1) + 3) = 6.0 * hl;
  const Eigen::VectorXd c = A.fullPivLu().solve(b);
  int s = 0;
  while (s + 1 < segs && at > t[s + 1]) ++s;
  const double u = at - t[s];
  return c(4 * s) + c(4 * s + 1) * u + c(4 * s + 2) * u * u + c(4 * s + 3) * u * u * u;
}

}  // namespace

TEST(Spline, CubicSamplesMatchOracle) {
  const std::vector<double> t = {0, 1, 2, 4, 5};
  std::vector<double> y;
  for (double v : t) y.push_back(v * v * v - 2.0 * v);
  const NaturalCubicSpline s(t, y);
  EXPECT_NEAR(s(3.0), oracle_spline(t, y, 3.0), 1e-6);
  for (double q = 0.0; q <= 5.0; q += 0.25) EXPECT_NEAR(s(q), oracle_spline(t, y, q), 1e-9) << q;
  // Natural end conditions.
  EXPECT_EQ(s.second_derivatives().front(), 0.0);
  EXPECT_EQ(s.second_derivatives().back(), 0.0);
}

TEST(Spline, RandomKnotsMatchOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t, y;
    double x = 0.0;
    const int n = 3 + trial % 8;
    for (int i = 0; i < n; ++i) {
      x += 1 + static_cast<int>(rng() % 3);
      t.push_back(x);
      y.push_back(u(rng));
    }
    const NaturalCubicSpline s(t, y);
    for (double q = t.front(); q <= t.back(); q += 0.5) ASSERT_NEAR(s(q), oracle_spline(t, y, q), 1e-8);
  }
}

TEST(Spline, ErrorsOnBadKnots) {
  const std::vector<double> one = {1.0};
  EXPECT_THROW(NaturalCubicSpline(one, one), Error);
  const std::vector<double> t = {0.0, 2.0, 1.0};
  EXPECT_THROW(NaturalCubicSpline(t, t), Error);
}

TEST(InterpolateTrack, GaplessUnchanged) {
  const auto t = cbvcc::testing::walk(1, 2, {{1, 0}, {0.5, 2}, {3, -1}});
  const auto out = interpolate_track(t);
  EXPECT_EQ(out.points, t.points);
  EXPECT_EQ(out.source, TrackSource::interpolated);
}

TEST(InterpolateTrack, TwoPointsLinearMidpoint) {
  Track t;
  t.points = {{0, 1.0, 3.0}, {2, 5.0, -1.0}};
  const auto out = interpolate_track(t);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.points[1].frame, 1);
  EXPECT_DOUBLE_EQ(out.points[1].x, 3.0);
  EXPECT_DOUBLE_EQ(out.points[1].y, 1.0);
}

TEST(InterpolateTrack, CubicSampledTrackUsesSpline) {
  Track t;
  for (int f : {0, 1, 2, 4, 5}) t.points.push_back({f, f * f * f - 2.0 * f, 1.0 * f});
  const auto out = interpolate_track(t);
  ASSERT_EQ(out.size(), 6u);
  std::vector<double> kt = {0, 1, 2, 4, 5}, kx;
  for (double v : kt) kx.push_back(v * v * v - 2.0 * v);
  EXPECT_NEAR(out.points[3].x, oracle_spline(kt, kx, 3.0), 1e-6);
  EXPECT_NEAR(out.points[3].y, 3.0, 1e-12);
  EXPECT_FALSE(out.has_gaps());
}

TEST(InterpolateTrack, AffineTracksAreExact) {
  // Property: gaps in any affine track x = a + b t are filled exactly,
  // whichever of the linear or spline paths applies.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double ax = u(rng) * 10, bx = u(rng), ay = u(rng) * 10, by = u(rng);
    Track t;
    for (int f = 0; f < kFramesPerPatch; ++f) {
      if (f == 0 || f == 19 || rng() % 3 == 0) t.points.push_back({f, ax + bx * f, ay + by * f});
    }
    const auto out = interpolate_track(t);
    ASSERT_EQ(out.size(), 20u);
    for (const auto& p : out.points) {
      ASSERT_NEAR(p.x, ax + bx * p.frame, 1e-9);
      ASSERT_NEAR(p.y, ay + by * p.frame, 1e-9);
    }
  }
}

TEST(InterpolateTrack, OnePointIsTooShort) {
  Track t;
  t.points = {{3, 1.0, 1.0}};
  try {
    interpolate_track(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_short);
  }
}

TEST(FocusTrack, CentralTrackWins) {
  Track a, b;
  for (int f = 8; f <= 12; ++f) {
    a.points.push_back({f, 25.0, 25.0});
    b.points.push_back({f, 5.0, 5.0});
  }
  a.track_id = 1;
  b.track_id = 2;
  EXPECT_EQ(select_focus_track({b, a})->track_id, 1);
}

TEST(FocusTrack, ShortOrEmptyGivesNone) {
  Track two;
  two.points = {{10, 25.0, 25.0}, {11, 25.0, 25.0}};
  EXPECT_FALSE(select_focus_track({two}));
  EXPECT_FALSE(select_focus_track({}));
}

TEST(FocusTrack, CoveringMiddleFrameBeatsNearerNonCovering) {
  Track covers, near;
  covers.track_id = 1;
  near.track_id = 2;
  for (int f = 5; f <= 15; ++f) covers.points.push_back({f, 40.0, 40.0});
  for (int f = 0; f <= 5; ++f) near.points.push_back({f, 25.0, 25.0});
  EXPECT_EQ(select_focus_track({near, covers})->track_id, 1);
}

TEST(FocusTrack, NoneCoverUsesTemporallyNearestPoint) {
  Track early, late;
  early.track_id = 1;
  late.track_id = 2;
  // early ends at frame 7 far away; late starts at frame 13 near the centre.
  for (int f = 0; f <= 7; ++f) early.points.push_back({f, f == 7 ? 45.0 : 25.0, 25.0});
  for (int f = 13; f <= 19; ++f) late.points.push_back({f, f == 13 ? 26.0 : 0.0, 25.0});
  EXPECT_EQ(select_focus_track({early, late})->track_id, 2);
}
