#include "memetect/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <opencv2/calib3d.hpp>
#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>

#include "cv_interop.hpp"
#include "memetect/errors.hpp"

namespace memetect {

std::uint64_t dhash64(const RasterImage& image) {
  const int w = image.width();
  const int h = image.height();
  const auto luma = image.luma();
  std::uint64_t bits = 0;
  for (int r = 0; r < 8; ++r) {
    const int y0 = r * h / 8;
    const int y1 = std::max(y0 + 1, (r + 1) * h / 8);
    std::array<long long, 9> sum{};
    std::array<long long, 9> count{};
    for (int c = 0; c < 9; ++c) {
      const int x0 = c * w / 9;
      const int x1 = std::max(x0 + 1, (c + 1) * w / 9);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) sum[c] += luma[static_cast<std::size_t>(y) * w + x];
      count[c] = static_cast<long long>(y1 - y0) * (x1 - x0);
    }
    // Cells can differ in size by a pixel; compare means exactly by cross-multiplying.
    for (int c = 0; c < 8; ++c) {
      bits <<= 1;
      if (sum[c] * count[c + 1] < sum[c + 1] * count[c]) bits |= 1;
    }
  }
  return bits;
}

namespace {

constexpr int kPad = 31;
constexpr int kExcludeMargin = 8;

Rect bbox_of(const std::vector<cv::Point2f>& pts, int width, int height) {
  if (pts.empty()) return {};
  float x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int ix0 = static_cast<int>(std::floor(x0));
  const int iy0 = static_cast<int>(std::floor(y0));
  const Rect r{ix0, iy0, static_cast<int>(std::floor(x1)) + 1 - ix0, static_cast<int>(std::floor(y1)) + 1 - iy0};
  return r.intersect({0, 0, width, height});
}

std::vector<cv::Point2f> to_points(const FeatureSet& f) {
  std::vector<cv::Point2f> pts;
  pts.reserve(f.size());
  for (const auto& p : f.points) pts.emplace_back(p.x, p.y);
  return pts;
}

cv::Mat descriptor_mat(const FeatureSet& f) {
  cv::Mat m(static_cast<int>(f.size()), 32, CV_8U);
  for (std::size_t i = 0; i < f.size(); ++i) std::copy(f.descriptors[i].begin(), f.descriptors[i].end(), m.ptr<std::uint8_t>(static_cast<int>(i)));
  return m;
}

MatchReport match_ordered(const FeatureSet& a, const FeatureSet& b) {
  MatchReport report;
  report.features_a = a.size();
  report.features_b = b.size();
  const auto pa = to_points(a);
  const auto pb = to_points(b);
  report.keypoints_a = bbox_of(pa, a.width, a.height);
  report.keypoints_b = bbox_of(pb, b.width, b.height);
  if (a.size() < 2 || b.size() < 2) return report;

  std::vector<cv::DMatch> matches;
  cv::BFMatcher(cv::NORM_HAMMING, true).match(descriptor_mat(a), descriptor_mat(b), matches);
  std::vector<cv::Point2f> src, dst;
  for (const auto& m : matches) {
    if (m.distance > kMaxDescriptorDistance) continue;
    src.push_back(pa[m.queryIdx]);
    dst.push_back(pb[m.trainIdx]);
  }
  report.tentative = static_cast<int>(src.size());
  if (src.size() < 2) return report;

  std::vector<std::uint8_t> inlier;
  const cv::Mat m = cv::estimateAffinePartial2D(src, dst, inlier, cv::RANSAC, kRansacThreshold, 2000, 0.99, 10);
  if (m.empty()) return report;

  std::vector<cv::Point2f> in_a, in_b;
  for (std::size_t i = 0; i < inlier.size(); ++i) {
    if (!inlier[i]) continue;
    in_a.push_back(src[i]);
    in_b.push_back(dst[i]);
  }
  report.count = static_cast<int>(in_a.size());
  report.inliers_a = bbox_of(in_a, a.width, a.height);
  report.inliers_b = bbox_of(in_b, b.width, b.height);
  report.a_to_b = Similarity{m.at<double>(0, 0), m.at<double>(1, 0), m.at<double>(0, 2), m.at<double>(1, 2)};
  return report;
}

}  // namespace

FeatureSet extract_features(const RasterImage& image, const std::vector<Rect>& exclude) {
  FeatureSet out;
  out.width = image.width();
  out.height = image.height();

  cv::Mat padded;
  cv::copyMakeBorder(detail::to_gray(image), padded, kPad, kPad, kPad, kPad, cv::BORDER_REFLECT_101);
  cv::Mat mask = cv::Mat::zeros(padded.size(), CV_8U);
  mask(cv::Rect(kPad, kPad, image.width(), image.height())).setTo(255);
  for (const auto& r : exclude) {
    const Rect grown = r.padded(kExcludeMargin).translated(kPad, kPad).intersect({0, 0, padded.cols, padded.rows});
    if (!grown.empty()) mask(detail::to_cv(grown)).setTo(0);
  }

  auto orb = cv::ORB::create(500);
  std::vector<cv::KeyPoint> kps;
  cv::Mat desc;
  orb->detectAndCompute(padded, mask, kps, desc);

  const std::size_t n = std::min(kps.size(), kMaxFeatures);
  out.points.reserve(n);
  out.descriptors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.points.push_back({kps[i].pt.x - kPad, kps[i].pt.y - kPad});
    Descriptor d{};
    std::copy_n(desc.ptr<std::uint8_t>(static_cast<int>(i)), d.size(), d.begin());
    out.descriptors.push_back(d);
  }
  return out;
}

Fingerprint fingerprint(const RasterImage& image, const std::vector<Rect>& exclude) {
  return {dhash64(image), extract_features(image, exclude)};
}

double Similarity::scale() const { return std::hypot(a, b); }

Similarity Similarity::inverse() const {
  const double det = a * a + b * b;
  Similarity inv{a / det, -b / det, 0, 0};
  inv.tx = -(inv.a * tx - inv.b * ty);
  inv.ty = -(inv.b * tx + inv.a * ty);
  return inv;
}

void Similarity::apply(double x, double y, double& ox, double& oy) const {
  ox = a * x - b * y + tx;
  oy = b * x + a * y + ty;
}

double MatchReport::ratio() const {
  const auto smaller = std::min(features_a, features_b);
  if (count < kMinInliers || smaller == 0) return 0.0;
  return std::min(1.0, static_cast<double>(count) / static_cast<double>(smaller));
}

MatchReport match_features(const FeatureSet& a, const FeatureSet& b) {
  // Match in a canonical order so the RANSAC sample sequence, and therefore
  // the inlier count, does not depend on argument order.
  const bool swap = std::tie(b.descriptors, b.width, b.height) < std::tie(a.descriptors, a.width, a.height);
  if (!swap) return match_ordered(a, b);
  MatchReport r = match_ordered(b, a);
  std::swap(r.inliers_a, r.inliers_b);
  std::swap(r.keypoints_a, r.keypoints_b);
  std::swap(r.features_a, r.features_b);
  if (r.a_to_b) r.a_to_b = r.a_to_b->inverse();
  return r;
}

MatchReport match_features(const RasterImage& a, const RasterImage& b) {
  for (const auto* img : {&a, &b}) {
    if (img->width() < kMinMatchSide || img->height() < kMinMatchSide) {
      throw Error(ErrorCode::InsufficientFeatures, "image smaller than 32x32 cannot be matched");
    }
  }
  return match_features(extract_features(a), extract_features(b));
}

}  // namespace memetect
