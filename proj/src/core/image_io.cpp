#include "image_io.hpp"

#include <algorithm>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace outpaint {
namespace {

PixelImage from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  PixelImage out(rgb.rows, rgb.cols, 3);
  for (int y = 0; y < rgb.rows; ++y)
    std::memcpy(&out(y, 0, 0), rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
  return out;
}

cv::Mat to_mat(const PixelImage& image) {
  cv::Mat rgb(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y)
    std::memcpy(rgb.ptr<std::uint8_t>(y), &image(y, 0, 0), static_cast<std::size_t>(image.width()) * 3);
  return rgb;
}

}  // namespace

PixelImage load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorKind::kDecode, "cannot read image '" + path.string() + "': no such file");
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::kDecode, "cannot decode image '" + path.string() + "': " + e.what());
  }
  if (bgr.empty() || bgr.channels() != 3)
    fail(ErrorKind::kDecode, "cannot decode image '" + path.string() + "'");
  return from_bgr(bgr);
}

PixelImage resize_image(const PixelImage& image, int height, int width) {
  require(height > 0 && width > 0, "resize target must be positive");
  require(image.channels() == 3, "resize expects an RGB image");
  if (image.height() == height && image.width() == width) return image;
  const bool shrinking = height <= image.height() && width <= image.width();
  cv::Mat src = to_mat(image);
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(width, height), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  PixelImage out(height, width, 3);
  for (int y = 0; y < height; ++y)
    std::memcpy(&out(y, 0, 0), dst.ptr<std::uint8_t>(y), static_cast<std::size_t>(width) * 3);
  return out;
}

PixelImage load_and_downsample(const std::filesystem::path& path, int height, int width) {
  return resize_image(load_image(path), height, width);
}

void save_png(const PixelImage& image, const std::filesystem::path& path) {
  require(image.channels() == 3 && !image.empty(), "save_png expects a non-empty RGB image");
  cv::Mat bgr;
  cv::cvtColor(to_mat(image), bgr, cv::COLOR_RGB2BGR);
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6, cv::IMWRITE_PNG_STRATEGY,
                                   cv::IMWRITE_PNG_STRATEGY_DEFAULT};
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr, params);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::kIo, "cannot write '" + path.string() + "': " + e.what());
  }
  if (!ok) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
}

PixelImage side_by_side(std::span<const PixelImage> images, int gap) {
  require(!images.empty(), "side_by_side needs at least one image");
  int height = 0;
  int width = gap * static_cast<int>(images.size() - 1);
  for (const auto& im : images) {
    height = std::max(height, im.height());
    width += im.width();
  }
  PixelImage out(height, width, 3);
  int x0 = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height(); ++y)
      std::memcpy(&out(y, x0, 0), &im(y, 0, 0), static_cast<std::size_t>(im.width()) * 3);
    x0 += im.width() + gap;
  }
  return out;
}

}  // namespace outpaint
