#include <gtest/gtest.h>

#include <filesystem>

#include "memetect/digest.hpp"
#include "memetect/errors.hpp"
#include "memetect/files.hpp"
#include "memetect/image.hpp"
#include "memetect/synth.hpp"

using namespace memetect;

TEST(Digest, Sha256KnownAnswer) {
  EXPECT_EQ(Digest::of(std::string_view("abc")).hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Digest::of(std::string_view("")).hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, IncrementalMatchesOneShot) {
  Sha256 h;
  h.update(std::string_view("ab"));
  h.update(std::string_view("c"));
  EXPECT_EQ(h.finish(), Digest::of(std::string_view("abc")));
}

TEST(Digest, HexRoundTrip) {
  const auto d = Digest::of(std::string_view("memetect"));
  EXPECT_EQ(Digest::from_hex(d.hex()), d);
  EXPECT_THROW(Digest::from_hex("zz"), Error);
}

TEST(Rect, IntersectUnitePad) {
  const Rect a{0, 0, 10, 10}, b{5, 5, 10, 10};
  EXPECT_EQ(a.intersect(b), (Rect{5, 5, 5, 5}));
  EXPECT_EQ(a.unite(b), (Rect{0, 0, 15, 15}));
  EXPECT_TRUE(a.intersect(Rect{20, 20, 2, 2}).empty());
  EXPECT_EQ(a.padded(2), (Rect{-2, -2, 14, 14}));
  EXPECT_NEAR(iou(a, b), 25.0 / 175.0, 1e-12);
}

TEST(RasterImage, CropAndBlit) {
  RasterImage img(8, 6, Rgba{10, 20, 30, 255});
  img.fill({2, 2, 3, 2}, {200, 0, 0, 255});
  const auto c = img.crop({2, 2, 3, 2});
  EXPECT_EQ(c.width(), 3);
  EXPECT_EQ(c.at(0, 0), (Rgba{200, 0, 0, 255}));
  RasterImage dst(4, 4);
  dst.blit(c, 2, 3);  // clipped at the edge
  EXPECT_EQ(dst.at(2, 3), (Rgba{200, 0, 0, 255}));
  EXPECT_EQ(dst.at(1, 3), (Rgba{0, 0, 0, 255}));
}

TEST(RasterImage, ContentDigestDependsOnShape) {
  const RasterImage a(4, 2), b(2, 4);
  EXPECT_NE(a.content_digest(), b.content_digest());
  EXPECT_EQ(a.content_digest(), RasterImage(4, 2).content_digest());
}

TEST(RasterImage, PngRoundTripIsLossless) {
  const auto img = synth::photo(3, 64, 48);
  const auto back = decode_image(encode_png(img));
  EXPECT_EQ(back, img);
}

TEST(RasterImage, DecodeGarbageFails) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  try {
    decode_image(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DecodeFailed);
  }
}

TEST(Files, AtomicWriteReplaces) {
  const auto dir = std::filesystem::temp_directory_path() / "memetect-files-test";
  std::filesystem::create_directories(dir);
  const auto p = dir / "x.txt";
  write_file_atomic(p, std::string_view("one"));
  write_file_atomic(p, std::string_view("two"));
  EXPECT_EQ(read_text_file(p), "two");
  std::filesystem::remove_all(dir);
}
