#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trainer.hpp"

namespace outpaint {

struct OverfitOptions {
  std::int64_t iterations = 500;
  // Share of the iterations spent in the adversarial phase; the rest is
  // generator-only MSE training. No discriminator warm-up.
  double adversarial_fraction = 0.1;
  std::uint64_t seed = 0;
  Dilations dilations = kDefaultDilations;
  double alpha = 0.0004;
  double learning_rate = 1e-3;
  // Cosine decay of the step size towards zero over the run. With a single
  // image the gradient is exact and a constant Adam step keeps bouncing
  // around the minimum.
  bool cosine_decay = true;
  std::function<void(std::int64_t iteration, double rmse)> on_mark;
};

struct OverfitMark {
  std::int64_t iteration = 0;
  double rmse = 0.0;
};

struct OverfitReport {
  std::int64_t iterations = 0;
  TrainingSchedule schedule;
  bool cosine_decay = false;
  double baseline_rmse = 0.0;  // strips filled with the mean, no generator
  double initial_rmse = 0.0;   // untrained generator
  std::vector<OverfitMark> marks;  // after 10%, 20%, ..., 100% of the budget
  double final_rmse = 0.0;
  // Every mark from 10% on is no worse than the one before it, and the
  // final mark is strictly better than the 10% mark.
  bool monotone = false;
  PixelImage output;

  std::string to_json() const;
};

// Trains a fresh model on batches made of `image` alone and tracks the
// masked RMSE of the outpainted result. The center is half the image
// width and each strip a quarter (128 x 128 gives 64 + 2 x 32).
OverfitReport overfit_sanity(const PixelImage& image, const OverfitOptions& options);

}  // namespace outpaint
