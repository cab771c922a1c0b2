#include <gtest/gtest.h>

#include "memetect/errors.hpp"
#include "memetect/fingerprint.hpp"
#include "memetect/synth.hpp"

using namespace memetect;

namespace {

// Same pattern as the reference script that produced the expected hashes.
RasterImage pattern(int w, int h) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y,
              {static_cast<std::uint8_t>(((x * 7 + y * 13) ^ (x * y)) & 255),
               static_cast<std::uint8_t>((x * 3 + y * y) & 255), static_cast<std::uint8_t>((255 - x * 5) & 255), 255});
  return img;
}

}  // namespace

TEST(Dhash, MatchesReference) {
  EXPECT_EQ(dhash64(pattern(50, 37)), 0xf9dbb00789d2444aULL);
  EXPECT_EQ(dhash64(pattern(64, 64)), 0xf78a97ab52271fe3ULL);
  EXPECT_EQ(dhash64(pattern(9, 8)), 0xfffbd5f6cea9f1f6ULL);
  EXPECT_EQ(dhash64(pattern(200, 120)), 0xc84a5a4aaa4a5a3aULL);
}

TEST(Dhash, FlatImageIsZero) { EXPECT_EQ(dhash64(RasterImage(30, 30, Rgba{90, 90, 90, 255})), 0u); }

TEST(Dhash, StableUnderResize) {
  const auto a = synth::photo(21, 256, 256);
  RasterImage half(128, 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) half.set(x, y, a.at(2 * x, 2 * y));
  EXPECT_LE(hamming(dhash64(a), dhash64(half)), 6);
  EXPECT_GT(hamming(dhash64(a), dhash64(synth::photo(22))), 12);
}

TEST(Features, MaskDropsKeypoints) {
  const auto img = synth::photo(30);
  const auto all = extract_features(img);
  const auto masked = extract_features(img, {{0, 0, 256, 128}});
  ASSERT_GT(all.size(), 50u);
  EXPECT_LT(masked.size(), all.size());
  for (const auto& p : masked.points) EXPECT_GE(p.y, 128.0f);
  EXPECT_LE(all.size(), kMaxFeatures);
}

TEST(Match, SelfMatchIsStrong) {
  const auto img = synth::photo(31);
  const auto r = match_features(img, img);
  EXPECT_GE(r.count, 100);
  ASSERT_TRUE(r.a_to_b);
  EXPECT_NEAR(r.a_to_b->scale(), 1.0, 0.01);
  EXPECT_GT(r.ratio(), 0.8);
}

TEST(Match, FindsCropWithOffset) {
  const auto img = synth::photo(32);
  const auto crop = img.crop({40, 60, 160, 140});
  const auto r = match_features(crop, img);
  ASSERT_TRUE(r.a_to_b);
  double x, y;
  r.a_to_b->apply(0, 0, x, y);
  EXPECT_NEAR(x, 40, 2.0);
  EXPECT_NEAR(y, 60, 2.0);
}

TEST(Match, SymmetricCount) {
  const auto a = synth::photo(33), b = synth::photo(33).crop({0, 0, 200, 200});
  EXPECT_EQ(match_features(a, b).count, match_features(b, a).count);
}

TEST(Match, UnrelatedImagesDoNotMatch) {
  EXPECT_LT(match_features(synth::photo(34), synth::photo(35)).count, kMinInliers + 4);
}

TEST(Match, TinyImageRejected) {
  try {
    match_features(RasterImage(16, 16), synth::photo(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientFeatures);
  }
}

TEST(Similarity, InverseRoundTrip) {
  const Similarity s{0.8, 0.3, 5, -7};
  double x, y, bx, by;
  s.apply(10, 20, x, y);
  s.inverse().apply(x, y, bx, by);
  EXPECT_NEAR(bx, 10, 1e-9);
  EXPECT_NEAR(by, 20, 1e-9);
}
