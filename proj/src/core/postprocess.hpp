#pragma once

#include "preprocess.hpp"
#include "tensor.hpp"

namespace outpaint {

struct BlendStats {
  bool fallback = false;       // region too thin; source was copied directly
  std::size_t region_pixels = 0;
  int max_iterations = 0;      // worst channel
  double max_residual = 0.0;   // worst channel, L2 norm of A x - b
};

inline constexpr double kBlendTolerance = 1e-3;

// Gradient-domain (Poisson) compositing of `source` into `destination`.
//
// The blend region is the complement of supp(mask), eroded by one pixel
// (3x3) and away from the image border. Inside it, the result solves the
// discrete Poisson equation per channel with the source Laplacian as
// guidance and destination values as Dirichlet boundary; everywhere else the
// result equals `destination`. A region narrower than three pixels falls
// back to copying the source over the mask complement.
PixelImage seamless_blend(const PixelImage& source, const PixelImage& destination,
                          const Mask& mask, BlendStats* stats = nullptr);

// Pixels of the eroded blend region (1 = solved for).
Mask blend_region(const Mask& mask);

}  // namespace outpaint
