#include <gtest/gtest.h>

#include "cbvcc/tracking/preprocess.hpp"

using namespace cbvcc;
using namespace cbvcc::tracking;

TEST(Preprocess, BrightFrameUnchanged) {
  Image f(50, 50, 200.0);
  EXPECT_EQ(preprocess_intensity(f, 20.0, 5.0, 1), f);
}

TEST(Preprocess, BlackFrameBecomesClampedNoise) {
  Image f(50, 50, 0.0);
  const auto out = preprocess_intensity(f, 20.0, 5.0, 1);
  int positive = 0;
  for (double v : out.pixels()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 255.0);
    positive += v > 0.0;
  }
  // q20 = 0, so roughly half the draws are clamped to zero.
  EXPECT_GT(positive, 1000);
  EXPECT_LT(positive, 1500);
}

TEST(Preprocess, UniqueQuantileLinearRule) {
  EXPECT_EQ(unique_quantile({5.0, 5.0, 5.0}, 0.2), 5.0);
  EXPECT_DOUBLE_EQ(unique_quantile({0, 1, 2, 3, 4, 4, 4, 4, 4}, 0.2), 0.8);
  EXPECT_DOUBLE_EQ(unique_quantile({10, 0, 20, 30, 40, 50}, 0.5), 25.0);
}

TEST(Preprocess, DarkPixelMeanMatchesQ20) {
  // Uniques {0, 10, 30, 50, ..., 250}: 14 values, position 0.2 * 13 = 2.6
  // lies between 30 and 50, so q20 = 42.
  Image f(50, 50, 250.0);
  std::vector<double> uniques = {0.0, 10.0};
  for (int v = 30; v <= 250; v += 20) uniques.push_back(v);
  for (std::size_t i = 0; i < uniques.size(); ++i) f.at(static_cast<int>(i), 0) = uniques[i];
  const double q20 = 42.0;
  ASSERT_DOUBLE_EQ(unique_quantile(f.pixels(), 0.2), q20);

  const int n = 10000;
  double sum = 0.0;
  for (int s = 0; s < n; ++s) sum += preprocess_intensity(f, 20.0, 5.0, static_cast<std::uint64_t>(s)).at(1, 0);
  EXPECT_NEAR(sum / n, q20, 3.0 * 5.0 / 100.0);
}

TEST(Preprocess, SameSeedSameOutput) {
  Image f(50, 50, 3.0);
  f.at(10, 10) = 100.0;
  EXPECT_EQ(preprocess_intensity(f, 20.0, 5.0, 9), preprocess_intensity(f, 20.0, 5.0, 9));
  EXPECT_NE(preprocess_intensity(f, 20.0, 5.0, 9), preprocess_intensity(f, 20.0, 5.0, 10));
}

TEST(Preprocess, CutoffOutsideRangeIsRangeError) {
  Image f(5, 5, 1.0);
  try {
    preprocess_intensity(f, 300.0, 5.0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::range);
  }
}
