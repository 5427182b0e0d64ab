#pragma once

#include <filesystem>
#include <span>

#include "tensor.hpp"

namespace outpaint {

// Decodes PNG/JPEG (or anything the codec backend reads) to 8-bit RGB.
// Grayscale inputs are replicated across channels; alpha is dropped.
PixelImage load_image(const std::filesystem::path& path);

// Area-averaging resize for downscaling, bilinear for upscaling; identity
// when the size already matches.
PixelImage resize_image(const PixelImage& image, int height, int width);

PixelImage load_and_downsample(const std::filesystem::path& path, int height, int width);

// PNG with pinned encoder settings, so identical pixels give identical bytes.
void save_png(const PixelImage& image, const std::filesystem::path& path);

// Horizontal concatenation, top-aligned, black padding below shorter images.
PixelImage side_by_side(std::span<const PixelImage> images, int gap = 2);

}  // namespace outpaint
