#include "memetect/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_interop.hpp"
#include "memetect/errors.hpp"

namespace memetect {

Rect Rect::intersect(const Rect& o) const {
  int x0 = std::max(x, o.x);
  int y0 = std::max(y, o.y);
  int x1 = std::min(right(), o.right());
  int y1 = std::min(bottom(), o.bottom());
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

Rect Rect::unite(const Rect& o) const {
  if (empty()) return o;
  if (o.empty()) return *this;
  int x0 = std::min(x, o.x);
  int y0 = std::min(y, o.y);
  int x1 = std::max(right(), o.right());
  int y1 = std::max(bottom(), o.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const Rect& a, const Rect& b) {
  const auto inter = a.intersect(b).area();
  const auto uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

RasterImage::RasterImage(int width, int height, Rgba fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidInput, "image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = fill.a;
  }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> rgba)
    : width_(width), height_(height), pixels_(std::move(rgba)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidInput, "image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(ErrorCode::InvalidInput, "pixel buffer length must be width*height*4");
  }
}

Digest RasterImage::content_digest() const {
  Sha256 h;
  const std::uint8_t dims[8] = {
      static_cast<std::uint8_t>(width_),       static_cast<std::uint8_t>(width_ >> 8),
      static_cast<std::uint8_t>(width_ >> 16), static_cast<std::uint8_t>(width_ >> 24),
      static_cast<std::uint8_t>(height_),      static_cast<std::uint8_t>(height_ >> 8),
      static_cast<std::uint8_t>(height_ >> 16), static_cast<std::uint8_t>(height_ >> 24)};
  h.update(std::span<const std::uint8_t>(dims, 8));
  h.update(pixels_);
  return h.finish();
}

RasterImage RasterImage::crop(const Rect& r) const {
  if (r.empty() || !bounds().contains(r)) throw Error(ErrorCode::ContractViolation, "crop rectangle outside image");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(r.w) * r.h * 4);
  for (int y = 0; y < r.h; ++y) {
    const auto* src = &pixels_[(static_cast<std::size_t>(r.y + y) * width_ + r.x) * 4];
    std::copy(src, src + static_cast<std::size_t>(r.w) * 4, &out[static_cast<std::size_t>(y) * r.w * 4]);
  }
  return RasterImage(r.w, r.h, std::move(out));
}

void RasterImage::fill(const Rect& r, Rgba c) {
  const Rect clipped = r.intersect(bounds());
  for (int y = clipped.y; y < clipped.bottom(); ++y)
    for (int x = clipped.x; x < clipped.right(); ++x) set(x, y, c);
}

void RasterImage::blit(const RasterImage& src, int dx, int dy) {
  const Rect target = Rect{dx, dy, src.width(), src.height()}.intersect(bounds());
  for (int y = target.y; y < target.bottom(); ++y)
    for (int x = target.x; x < target.right(); ++x) set(x, y, src.at(x - dx, y - dy));
}

std::vector<std::uint8_t> RasterImage::luma() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width_) * height_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto* p = &pixels_[i * 4];
    // Integer Rec.601 weights, rounded; identical on every platform.
    out[i] = static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
  }
  return out;
}

namespace detail {

cv::Mat to_bgr(const RasterImage& img) {
  cv::Mat rgba(img.height(), img.width(), CV_8UC4, const_cast<std::uint8_t*>(img.bytes().data()));
  cv::Mat bgr;
  cv::cvtColor(rgba, bgr, cv::COLOR_RGBA2BGR);
  return bgr;
}

cv::Mat to_gray(const RasterImage& img) {
  auto luma = img.luma();
  cv::Mat gray(img.height(), img.width(), CV_8UC1);
  std::copy(luma.begin(), luma.end(), gray.data);
  return gray;
}

RasterImage from_mat(const cv::Mat& mat) {
  cv::Mat rgba;
  switch (mat.channels()) {
    case 1: cv::cvtColor(mat, rgba, cv::COLOR_GRAY2RGBA); break;
    case 3: cv::cvtColor(mat, rgba, cv::COLOR_BGR2RGBA); break;
    case 4: cv::cvtColor(mat, rgba, cv::COLOR_BGRA2RGBA); break;
    default: throw Error(ErrorCode::DecodeFailed, "unsupported channel count");
  }
  if (rgba.depth() != CV_8U) rgba.convertTo(rgba, CV_8U, 1.0 / 257.0);
  std::vector<std::uint8_t> bytes(rgba.total() * 4);
  if (rgba.isContinuous()) {
    std::copy(rgba.data, rgba.data + bytes.size(), bytes.begin());
  } else {
    for (int y = 0; y < rgba.rows; ++y)
      std::copy(rgba.ptr(y), rgba.ptr(y) + rgba.cols * 4, &bytes[static_cast<std::size_t>(y) * rgba.cols * 4]);
  }
  return RasterImage(rgba.cols, rgba.rows, std::move(bytes));
}

}  // namespace detail

RasterImage decode_image(std::span<const std::uint8_t> encoded) {
  if (encoded.empty()) throw Error(ErrorCode::DecodeFailed, "empty image payload");
  cv::Mat buf(1, static_cast<int>(encoded.size()), CV_8UC1, const_cast<std::uint8_t*>(encoded.data()));
  cv::Mat mat;
  try {
    mat = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::DecodeFailed, std::string("image decode failed: ") + e.what());
  }
  if (mat.empty()) throw Error(ErrorCode::DecodeFailed, "image bytes are not a decodable PNG/JPEG");
  return detail::from_mat(mat);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RasterImage load_image(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

namespace {

std::vector<std::uint8_t> encode(const RasterImage& img, const char* ext, const std::vector<int>& params) {
  cv::Mat rgba(img.height(), img.width(), CV_8UC4, const_cast<std::uint8_t*>(img.bytes().data()));
  cv::Mat bgra;
  cv::cvtColor(rgba, bgra, cv::COLOR_RGBA2BGRA);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, bgra, out, params)) throw Error(ErrorCode::Internal, std::string("encode failed: ") + ext);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  return encode(img, ".png", {cv::IMWRITE_PNG_COMPRESSION, 6});
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality) {
  cv::Mat rgba(img.height(), img.width(), CV_8UC4, const_cast<std::uint8_t*>(img.bytes().data()));
  cv::Mat bgr;
  cv::cvtColor(rgba, bgr, cv::COLOR_RGBA2BGR);
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".jpg", bgr, out, {cv::IMWRITE_JPEG_QUALITY, quality})) {
    throw Error(ErrorCode::Internal, "jpeg encode failed");
  }
  return out;
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
  auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
}

}  // namespace memetect
