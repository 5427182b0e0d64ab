#pragma once

#include <optional>
#include <string>
#include <vector>

#include "network.hpp"
#include "postprocess.hpp"
#include "preprocess.hpp"
#include "tensor.hpp"

namespace outpaint {

// How the destination for the final blend is formed.
//  kPreserveCenter: renormalized generator output with the known pixels
//    pasted back first, so known pixels survive the blend unchanged.
//  kLiteral: the renormalized generator output as-is.
enum class BlendMode { kPreserveCenter, kLiteral };

struct OutpaintResult {
  PixelImage output;           // I_op
  ImageTensor raw;             // I_o, generator output in [0,1]
  std::optional<double> rmse;  // against ground truth, over the strips
  OutpaintGeometry geometry;   // geometry of the last generator call
  BlendStats blend;
};

// A generator ready for inference.
struct Generator {
  NetworkSpec spec;
  Params<float> params;
};

// Single-shot outpainting of an image whose center columns are known. The
// strip pixels of `image` are ignored. When `ground_truth` is given, the
// result carries the masked RMSE against it.
OutpaintResult outpaint_once(const Generator& generator, const PixelImage& image,
                             const OutpaintGeometry& geometry,
                             const std::optional<PixelImage>& ground_truth = std::nullopt,
                             BlendMode mode = BlendMode::kPreserveCenter);

struct ExpandedInput {
  PixelImage canvas;             // widened image, strips hold the rounded mean
  Tensor<float> generator_input;  // normalized RGB + mask channel
  Mask mask;                      // 1 on the new strips
};

// Widens `image` by k columns on each side, filling the new strips with the
// scalar mean of the current image.
ExpandedInput expand_and_pad(const PixelImage& image, int k);

// Repeats expand / generate / blend `iterations` times; the output is
// 2 k iterations columns wider than the input.
OutpaintResult outpaint_recursive(const Generator& generator, const PixelImage& image,
                                  int iterations, int k,
                                  BlendMode mode = BlendMode::kPreserveCenter);

struct EvaluationRow {
  std::string path;
  double rmse = 0.0;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  double mean_rmse = 0.0;

  // "path,rmse" rows followed by a "mean" row.
  std::string to_csv() const;
};

// Outpaints each image (already at the geometry size) against itself as
// ground truth.
EvaluationReport evaluate_images(const Generator& generator, const OutpaintGeometry& geometry,
                                 const std::vector<std::string>& paths,
                                 const std::vector<PixelImage>& images);

}  // namespace outpaint
