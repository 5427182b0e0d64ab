#include "sanity.hpp"

#include <cmath>

#include "config.hpp"
#include "objectives.hpp"
#include "outpaint.hpp"

namespace outpaint {
namespace {

PixelImage mean_filled(const PixelImage& image, const Mask& mask) {
  const PreprocessedPair pair = assemble_input(normalize(image), mask);
  ImageTensor rgb(image.height(), image.width(), 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) rgb(y, x, c) = pair.generator_input(y, x, c);
  return renormalize(rgb);
}

}  // namespace

std::string OverfitReport::to_json() const {
  Json marks_json = Json::array();
  for (const auto& m : marks) marks_json.push_back({{"iteration", m.iteration}, {"rmse", m.rmse}});
  return Json{{"iterations", iterations},
              {"schedule", outpaint::to_json(schedule)},
              {"baseline_rmse", baseline_rmse},
              {"initial_rmse", initial_rmse},
              {"cosine_decay", cosine_decay},
              {"marks", marks_json},
              {"final_rmse", final_rmse},
              {"monotone", monotone}}
      .dump(2);
}

OverfitReport overfit_sanity(const PixelImage& image, const OverfitOptions& options) {
  require(options.iterations >= 0, "iteration count must be non-negative");
  require(options.adversarial_fraction >= 0.0 && options.adversarial_fraction <= 1.0,
          "adversarial fraction must lie in [0,1]");
  if (image.width() % 4 != 0 || image.height() % 4 != 0 || image.channels() != 3)
    fail(ErrorKind::kArgument, "overfit image must be RGB with height and width divisible by 4");

  ModelConfig model;
  model.geometry = OutpaintGeometry{image.height(), image.width() / 2, image.width() / 4};
  model.dilations = options.dilations;
  model.validate();

  OverfitReport report;
  report.iterations = options.iterations;
  report.cosine_decay = options.cosine_decay;
  auto& s = report.schedule;
  s.t3 = static_cast<std::int64_t>(
      std::llround(static_cast<double>(options.iterations) * options.adversarial_fraction));
  s.t1 = options.iterations - s.t3;
  s.t2 = 0;
  s.alpha = options.alpha;
  s.batch_size = 1;
  s.learning_rate = options.learning_rate;
  s.seed = options.seed;
  s.validate();

  const Mask mask = build_mask(model.geometry);
  report.baseline_rmse = rmse(image, mean_filled(image, mask), mask);

  Trainer trainer(initialize_training(model, s, options.seed));
  auto measure = [&]() {
    const Generator g{generator_spec(model.dilations), trainer.state().generator};
    OutpaintResult r = outpaint_once(g, image, model.geometry, image);
    report.output = std::move(r.output);
    return *r.rmse;
  };
  report.initial_rmse = measure();
  report.final_rmse = report.initial_rmse;

  const std::vector<ImageTensor> batch{normalize(image)};
  std::int64_t done = 0;
  for (int decile = 1; decile <= 10 && options.iterations > 0; ++decile) {
    const std::int64_t target = (options.iterations * decile + 9) / 10;
    while (done < target) {
      if (options.cosine_decay) {
        const double t = static_cast<double>(done) / static_cast<double>(options.iterations);
        trainer.set_learning_rate(options.learning_rate * 0.5 * (1.0 + std::cos(M_PI * t)));
      }
      trainer.step(batch);
      ++done;
    }
    const double r = measure();
    report.marks.push_back({done, r});
    if (options.on_mark) options.on_mark(done, r);
  }
  if (!report.marks.empty()) {
    report.final_rmse = report.marks.back().rmse;
    bool ok = report.marks.back().rmse < report.marks.front().rmse;
    for (std::size_t i = 1; i < report.marks.size(); ++i)
      ok = ok && report.marks[i].rmse <= report.marks[i - 1].rmse;
    report.monotone = ok;
  }
  return report;
}

}  // namespace outpaint
