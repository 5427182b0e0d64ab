#include "preprocess.hpp"

#include <numeric>
#include <string>

namespace outpaint {

void OutpaintGeometry::validate() const {
  require(height > 0 && center_width > 0 && strip_width > 0,
          "outpaint geometry requires positive height, center width and strip width (got " +
              std::to_string(height) + ", " + std::to_string(center_width) + ", " +
              std::to_string(strip_width) + ")");
}

std::size_t Mask::support_size() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

Mask strip_mask(int height, int width, int strip_width) {
  require(height > 0 && width > 0 && strip_width >= 0, "invalid mask dimensions");
  Mask mask(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) mask.set(y, x, x < strip_width || x >= width - strip_width);
  return mask;
}

Mask build_mask(const OutpaintGeometry& geometry) {
  geometry.validate();
  return strip_mask(geometry.height, geometry.total_width(), geometry.strip_width);
}

ImageTensor normalize(const PixelImage& image) {
  ImageTensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = static_cast<float>(image[i]) / 255.0f;
  return out;
}

double mean_unmasked(const ImageTensor& image, const Mask& mask) {
  require(image.height() == mask.height() && image.width() == mask.width(),
          "image and mask shapes differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask(y, x)) continue;
      for (int c = 0; c < image.channels(); ++c) sum += image(y, x, c);
      count += static_cast<std::size_t>(image.channels());
    }
  }
  require(count > 0, "mean over the unmasked region is undefined: mask covers the whole image");
  return sum / static_cast<double>(count);
}

PreprocessedPair assemble_input(const ImageTensor& image, const Mask& mask) {
  require(image.channels() == 3, "expected an RGB image");
  const auto mu = static_cast<float>(mean_unmasked(image, mask));
  Tensor<float> input(image.height(), image.width(), 4);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const bool hidden = mask(y, x) != 0;
      for (int c = 0; c < 3; ++c) input(y, x, c) = hidden ? mu : image(y, x, c);
      input(y, x, 3) = hidden ? 1.0f : 0.0f;
    }
  }
  return {image, std::move(input)};
}

}  // namespace outpaint
