#pragma once

#include <opencv2/core.hpp>

#include "memetect/image.hpp"

namespace memetect::detail {

// Zero-copy view is not possible for const images with OpenCV's API, so these
// copy. Images here are small (a few hundred pixels a side).
cv::Mat to_bgr(const RasterImage& img);
cv::Mat to_gray(const RasterImage& img);
RasterImage from_mat(const cv::Mat& mat);

inline cv::Rect to_cv(const Rect& r) { return {r.x, r.y, r.w, r.h}; }

}  // namespace memetect::detail
