#include <gtest/gtest.h>

#include <opencv2/imgcodecs.hpp>

#include "cbvcc/io.hpp"
#include "test_util.hpp"

using namespace cbvcc;
using cbvcc::testing::TempDir;
using cbvcc::testing::write_text;

namespace {

void write_stack(const std::string& path, int pages, int type, const cv::Scalar& value) {
  std::vector<cv::Mat> mats;
  for (int i = 0; i < pages; ++i) mats.emplace_back(kPatchSize, kPatchSize, type, value);
  ASSERT_TRUE(cv::imwritemulti(path, mats));
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected cbvcc::Error";
  return ErrorKind::config;
}

}  // namespace

TEST(LoadPatch, GrayStackHasTwentyFrames) {
  TempDir dir("io");
  std::vector<cv::Mat> mats;
  for (int i = 0; i < kFramesPerPatch; ++i) mats.emplace_back(kPatchSize, kPatchSize, CV_8UC1, cv::Scalar(i * 10));
  ASSERT_TRUE(cv::imwritemulti(dir.file("p.tif"), mats));
  const auto patch = load_patch(dir.file("p.tif"));
  ASSERT_EQ(patch.frames.size(), 20u);
  EXPECT_EQ(patch.id, "p");
  for (int i = 0; i < kFramesPerPatch; ++i) {
    EXPECT_EQ(patch.frames[i].width(), 50);
    EXPECT_EQ(patch.frames[i].at(7, 3), i * 10.0);
  }
}

TEST(LoadPatch, RgbStackUsesGreenPlane) {
  TempDir dir("io");
  // OpenCV scalars are BGR: green is the middle component.
  write_stack(dir.file("rgb.tif"), kFramesPerPatch, CV_8UC3, cv::Scalar(0, 137, 0));
  const auto patch = load_patch(dir.file("rgb.tif"));
  for (const auto& f : patch.frames) {
    for (double v : f.pixels()) ASSERT_EQ(v, 137.0);
  }
}

TEST(LoadPatch, NineteenPagesIsShapeErrorNamingCount) {
  TempDir dir("io");
  write_stack(dir.file("short.tif"), 19, CV_8UC1, cv::Scalar(5));
  try {
    load_patch(dir.file("short.tif"));
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
    EXPECT_NE(std::string(e.what()).find("19"), std::string::npos);
  }
}

TEST(LoadPatch, WrongFrameSizeIsShapeError) {
  TempDir dir("io");
  std::vector<cv::Mat> mats(kFramesPerPatch, cv::Mat(40, 50, CV_8UC1, cv::Scalar(1)));
  ASSERT_TRUE(cv::imwritemulti(dir.file("small.tif"), mats));
  EXPECT_EQ(kind_of([&] { load_patch(dir.file("small.tif")); }), ErrorKind::shape);
}

TEST(LoadPatch, MalformedFileIsFormatError) {
  TempDir dir("io");
  write_text(dir.file("junk.tif"), "not a tiff");
  EXPECT_EQ(kind_of([&] { load_patch(dir.file("junk.tif")); }), ErrorKind::format);
  EXPECT_EQ(kind_of([&] { load_patch(dir.file("missing.tif")); }), ErrorKind::format);
}

TEST(LoadPatch, SaveLoadRoundTrip) {
  TempDir dir("io");
  VideoPatch p;
  p.id = "rt";
  for (int f = 0; f < kFramesPerPatch; ++f) {
    Image img(kPatchSize, kPatchSize);
    for (int y = 0; y < kPatchSize; ++y)
      for (int x = 0; x < kPatchSize; ++x) img.at(x, y) = (x * 3 + y * 7 + f) % 256;
    p.frames.push_back(img);
  }
  save_patch(dir.file("rt.tif"), p);
  const auto q = load_patch(dir.file("rt.tif"));
  for (int f = 0; f < kFramesPerPatch; ++f) EXPECT_EQ(q.frames[f], p.frames[f]);
}

TEST(LoadTracks, OneIdThreeRows) {
  TempDir dir("io");
  write_text(dir.file("t.csv"), "track_id,frame,x_px,y_px\n4,2,1.5,2\n4,0,1,1\n4,1,1.25,1.5\n");
  const auto tracks = load_tracks(dir.file("t.csv"));
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].track_id, 4);
  ASSERT_EQ(tracks[0].size(), 3u);
  EXPECT_EQ(tracks[0].points[0].frame, 0);
  EXPECT_EQ(tracks[0].points[2].x, 1.5);
}

TEST(LoadTracks, TwoIds) {
  TempDir dir("io");
  write_text(dir.file("t.csv"), "track_id,frame,x_px,y_px\n1,0,1,1\n2,0,5,5\n1,1,2,1\n");
  const auto tracks = load_tracks(dir.file("t.csv"));
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_EQ(tracks[0].size(), 2u);
  EXPECT_EQ(tracks[1].size(), 1u);
}

TEST(LoadTracks, FrameOutOfRangeIsRangeError) {
  TempDir dir("io");
  write_text(dir.file("t.csv"), "track_id,frame,x_px,y_px\n1,25,1,1\n");
  EXPECT_EQ(kind_of([&] { load_tracks(dir.file("t.csv")); }), ErrorKind::range);
}

TEST(LoadTracks, DuplicateRowIsDuplicateError) {
  TempDir dir("io");
  write_text(dir.file("t.csv"), "track_id,frame,x_px,y_px\n1,3,1,1\n1,3,2,2\n");
  EXPECT_EQ(kind_of([&] { load_tracks(dir.file("t.csv")); }), ErrorKind::duplicate);
}

TEST(LoadTracks, RoundTripIsIdentity) {
  TempDir dir("io");
  write_text(dir.file("t.csv"),
             "track_id,frame,x_px,y_px\n1,0,0.1,0.2\n1,5,3.333333333333333,7\n9,19,49.9,0\n");
  const auto a = load_tracks(dir.file("t.csv"));
  save_tracks(dir.file("u.csv"), a);
  const auto b = load_tracks(dir.file("u.csv"));
  EXPECT_EQ(a, b);
}

TEST(SavePredictions, OneRow) {
  TempDir dir("io");
  save_predictions({{"p1", 0.5, 1}}, dir.file("pred.csv"));
  EXPECT_EQ(cbvcc::testing::read_text(dir.file("pred.csv")), "patch_id,prob_class1,pred_label\np1,0.500000,1\n");
}

TEST(SavePredictions, EmptyIsHeaderOnly) {
  TempDir dir("io");
  save_predictions({}, dir.file("pred.csv"));
  EXPECT_EQ(cbvcc::testing::read_text(dir.file("pred.csv")), "patch_id,prob_class1,pred_label\n");
}

TEST(SavePredictions, RoundTripAtSixDecimals) {
  TempDir dir("io");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Prediction> preds;
  for (int i = 0; i < 50; ++i) {
    const double p = u(rng);
    preds.push_back({"p" + std::to_string(i), p, p >= 0.5 ? 1 : 0});
  }
  save_predictions(preds, dir.file("pred.csv"));
  const auto back = load_predictions(dir.file("pred.csv"));
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(back[i].patch_id, preds[i].patch_id);
    EXPECT_NEAR(back[i].prob_class1, preds[i].prob_class1, 5e-7);
    EXPECT_EQ(back[i].pred_label, preds[i].pred_label);
  }
  // At declared precision the second trip is exact.
  save_predictions(back, dir.file("pred2.csv"));
  EXPECT_EQ(load_predictions(dir.file("pred2.csv")), back);
}

TEST(SavePredictions, DuplicateIdFailsBeforeWriting) {
  TempDir dir("io");
  const auto path = dir.file("pred.csv");
  EXPECT_EQ(kind_of([&] { save_predictions({{"a", 0.1, 0}, {"a", 0.2, 0}}, path); }), ErrorKind::duplicate);
  EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Manifest, RoundTripAndMissingTracksFile) {
  TempDir dir("io");
  write_text(dir.file("m.csv"),
             "patch_id,path,label,group_id,split\na,a.tif,1,g1,train\nb,b.tif,,g2,test\nc,c.tif,0,g2,\n");
  const auto m = load_manifest(dir.file("m.csv"));
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].label, 1);
  EXPECT_FALSE(m.entries[1].label);
  EXPECT_EQ(m.entries[1].split, Split::test);
  EXPECT_FALSE(m.entries[2].split);
  save_manifest(dir.file("m2.csv"), m);
  EXPECT_EQ(load_manifest(dir.file("m2.csv")).entries, m.entries);
  EXPECT_TRUE(load_tracks_for(dir.path().string(), "nothing").empty());
}

TEST(Manifest, BadSplitAndDuplicateId) {
  TempDir dir("io");
  write_text(dir.file("m.csv"), "patch_id,path,label,group_id,split\na,a.tif,1,g1,holdout\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir.file("m.csv")); }), ErrorKind::format);
  write_text(dir.file("m.csv"), "patch_id,path,label,group_id,split\na,a.tif,1,g1,train\na,b.tif,0,g1,train\n");
  EXPECT_EQ(kind_of([&] { load_manifest(dir.file("m.csv")); }), ErrorKind::duplicate);
}
