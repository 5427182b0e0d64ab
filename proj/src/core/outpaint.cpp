#include "outpaint.hpp"

#include <cmath>
#include <cstdio>

#include "objectives.hpp"

namespace outpaint {
namespace {

void check_canvas(const Generator& generator, Shape input) {
  std::vector<Shape> shapes;
  try {
    shapes = trace_shapes(generator.spec, input);
  } catch (const Error& e) {
    fail(ErrorKind::kArgument, "generator cannot run on a " + std::to_string(input.height) + "x" +
                                   std::to_string(input.width) + " canvas: " + e.what());
  }
  const Shape& out = shapes.back();
  if (out.height != input.height || out.width != input.width) {
    fail(ErrorKind::kArgument,
         "generator maps a " + std::to_string(input.height) + "x" + std::to_string(input.width) +
             " canvas to " + std::to_string(out.height) + "x" + std::to_string(out.width) +
             "; canvas height and width must be even");
  }
}

PixelImage generate_and_blend(const Generator& generator, const PixelImage& canvas,
                              const Tensor<float>& input, const Mask& mask, BlendMode mode,
                              OutpaintResult& result) {
  check_canvas(generator, input.shape());
  result.raw = forward(generator.spec, generator.params, input);
  PixelImage destination = renormalize(result.raw);
  if (mode == BlendMode::kPreserveCenter) {
    for (int y = 0; y < canvas.height(); ++y)
      for (int x = 0; x < canvas.width(); ++x)
        if (!mask(y, x))
          for (int c = 0; c < 3; ++c) destination(y, x, c) = canvas(y, x, c);
  }
  return seamless_blend(canvas, destination, mask, &result.blend);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

OutpaintResult outpaint_once(const Generator& generator, const PixelImage& image,
                             const OutpaintGeometry& geometry,
                             const std::optional<PixelImage>& ground_truth, BlendMode mode) {
  geometry.validate();
  if (image.height() != geometry.height || image.width() != geometry.total_width() ||
      image.channels() != 3) {
    fail(ErrorKind::kArgument,
         "image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
             "x" + std::to_string(image.channels()) + " but the geometry expects " +
             std::to_string(geometry.height) + "x" + std::to_string(geometry.total_width()) +
             "x3");
  }
  const Mask mask = build_mask(geometry);
  const PreprocessedPair pair = assemble_input(normalize(image), mask);

  OutpaintResult result;
  result.geometry = geometry;
  result.output = generate_and_blend(generator, image, pair.generator_input, mask, mode, result);
  if (ground_truth) {
    require(ground_truth->shape() == image.shape(), "ground truth shape differs from the input");
    result.rmse = rmse(*ground_truth, result.output, mask);
  }
  return result;
}

ExpandedInput expand_and_pad(const PixelImage& image, int k) {
  require(k >= 1, "strip width k must be >= 1");
  require(image.channels() == 3 && !image.empty(), "expected a non-empty RGB image");
  const int h = image.height();
  const int w = image.width() + 2 * k;

  double sum = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) sum += image[i];
  const double mean = sum / static_cast<double>(image.size());

  ExpandedInput out;
  out.mask = strip_mask(h, w, k);
  out.canvas = PixelImage(h, w, 3, static_cast<std::uint8_t>(std::floor(mean + 0.5)));
  out.generator_input = Tensor<float>(h, w, 4);
  const auto fill = static_cast<float>(mean / 255.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool hidden = x < k || x >= k + image.width();
      for (int c = 0; c < 3; ++c) {
        if (!hidden) out.canvas(y, x, c) = image(y, x - k, c);
        out.generator_input(y, x, c) = hidden ? fill : out.canvas(y, x, c) / 255.0f;
      }
      out.generator_input(y, x, 3) = hidden ? 1.0f : 0.0f;
    }
  }
  return out;
}

OutpaintResult outpaint_recursive(const Generator& generator, const PixelImage& image,
                                  int iterations, int k, BlendMode mode) {
  require(iterations >= 1, "recursive outpainting needs at least one iteration");
  OutpaintResult result;
  PixelImage current = image;
  for (int i = 0; i < iterations; ++i) {
    const int known = current.width();
    ExpandedInput expanded = expand_and_pad(current, k);
    current = generate_and_blend(generator, expanded.canvas, expanded.generator_input,
                                 expanded.mask, mode, result);
    result.geometry = OutpaintGeometry{current.height(), known, k};
  }
  result.output = std::move(current);
  return result;
}

std::string EvaluationReport::to_csv() const {
  std::string out = "path,rmse\n";
  for (const auto& row : rows) out += csv_field(row.path) + "," + number(row.rmse) + "\n";
  out += "mean," + number(mean_rmse) + "\n";
  return out;
}

EvaluationReport evaluate_images(const Generator& generator, const OutpaintGeometry& geometry,
                                 const std::vector<std::string>& paths,
                                 const std::vector<PixelImage>& images) {
  require(paths.size() == images.size(), "paths and images differ in count");
  require(!images.empty(), "nothing to evaluate");
  EvaluationReport report;
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const OutpaintResult r = outpaint_once(generator, images[i], geometry, images[i]);
    report.rows.push_back({paths[i], *r.rmse});
    total += *r.rmse;
  }
  report.mean_rmse = total / static_cast<double>(images.size());
  return report;
}

}  // namespace outpaint
