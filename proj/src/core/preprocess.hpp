#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace outpaint {

// An image of `height` rows whose known center (`center_width` columns) is
// flanked by two unknown strips of `strip_width` columns each.
struct OutpaintGeometry {
  int height = 128;
  int center_width = 64;
  int strip_width = 32;

  int total_width() const { return center_width + 2 * strip_width; }
  void validate() const;
  friend bool operator==(const OutpaintGeometry&, const OutpaintGeometry&) = default;
};

inline constexpr OutpaintGeometry kDefaultGeometry{128, 64, 32};

// Binary H x W mask; 1 marks pixels to outpaint.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width) : height_(height), width_(width),
      data_(static_cast<std::size_t>(height) * width, 0) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t operator()(int y, int x) const { return data_[index(y, x)]; }
  void set(int y, int x, bool on) { data_[index(y, x)] = on ? 1 : 0; }
  std::size_t support_size() const;
  const std::vector<std::uint8_t>& values() const { return data_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width_ + x; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

// M_ij = 1 exactly when j < k or j >= k + n.
Mask build_mask(const OutpaintGeometry& geometry);
// Mask of the same form for an arbitrary canvas width.
Mask strip_mask(int height, int width, int strip_width);

// Exact v / 255 per element.
ImageTensor normalize(const PixelImage& image);

// Scalar mean over every channel of the pixels with M = 0.
double mean_unmasked(const ImageTensor& image, const Mask& mask);

struct PreprocessedPair {
  ImageTensor ground_truth;     // I_n
  Tensor<float> generator_input;  // I_p: mean-filled RGB + mask channel
};

PreprocessedPair assemble_input(const ImageTensor& image, const Mask& mask);

}  // namespace outpaint
