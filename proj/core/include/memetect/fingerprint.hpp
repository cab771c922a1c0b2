#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

#include "memetect/image.hpp"

namespace memetect {

/// 64-bit difference hash. The luma plane is box-averaged onto a 9x8 grid;
/// bit (row r, col c) is set when cell c is darker than cell c+1. Bits are
/// packed row-major, most significant bit first.
std::uint64_t dhash64(const RasterImage& image);

inline int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }
inline double normalized_hamming(std::uint64_t a, std::uint64_t b) { return hamming(a, b) / 64.0; }

struct Keypoint {
  float x = 0;
  float y = 0;
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};
using Descriptor = std::array<std::uint8_t, 32>;  // 256-bit ORB

inline constexpr std::size_t kMaxFeatures = 512;

struct FeatureSet {
  int width = 0;  // source image size
  int height = 0;
  std::vector<Keypoint> points;
  std::vector<Descriptor> descriptors;  // parallel to points

  std::size_t size() const { return points.size(); }
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// ORB keypoints and descriptors, at most kMaxFeatures. Keypoints inside any
/// rectangle of `exclude` (grown by a small margin) are dropped.
FeatureSet extract_features(const RasterImage& image, const std::vector<Rect>& exclude = {});

struct Fingerprint {
  std::uint64_t dhash = 0;
  FeatureSet features;
};

Fingerprint fingerprint(const RasterImage& image, const std::vector<Rect>& exclude = {});

/// x' = a*x - b*y + tx,  y' = b*x + a*y + ty  (rotation, uniform scale, shift)
struct Similarity {
  double a = 1, b = 0, tx = 0, ty = 0;

  double scale() const;
  Similarity inverse() const;
  void apply(double x, double y, double& ox, double& oy) const;
};

struct MatchReport {
  int count = 0;                    // geometrically consistent matches
  int tentative = 0;                // cross-checked descriptor matches
  Rect inliers_a, inliers_b;        // bbox of inlier keypoints in each image
  Rect keypoints_a, keypoints_b;    // bbox of all keypoints in each image
  std::optional<Similarity> a_to_b;
  std::size_t features_a = 0, features_b = 0;

  /// inliers / min(feature counts); zero below kMinInliers.
  double ratio() const;
};

inline constexpr int kMaxDescriptorDistance = 64;
inline constexpr double kRansacThreshold = 3.0;
inline constexpr int kMinInliers = 6;
inline constexpr int kMinMatchSide = 32;

/// Cross-checked Hamming matching followed by a RANSAC similarity fit.
/// Symmetric: swapping the arguments swaps the per-image fields and inverts
/// the transform, and never changes `count`.
MatchReport match_features(const FeatureSet& a, const FeatureSet& b);

/// Throws ErrorCode::InsufficientFeatures when either image is under 32x32.
MatchReport match_features(const RasterImage& a, const RasterImage& b);

}  // namespace memetect
