#include "objectives.hpp"

namespace outpaint {
namespace {

bool clamped(double p) { return p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon; }

}  // namespace

double disc_loss(double p_real, double p_fake) {
  return -(std::log(clamp_probability(p_real)) + std::log(1.0 - clamp_probability(p_fake)));
}

double disc_loss_grad_real(double p_real) {
  return clamped(p_real) ? 0.0 : -1.0 / p_real;
}

double disc_loss_grad_fake(double p_fake) {
  return clamped(p_fake) ? 0.0 : 1.0 / (1.0 - p_fake);
}

double gen_loss(double mse, double p_fake, double alpha) {
  require(alpha >= 0.0, "alpha must be non-negative");
  return mse - alpha * std::log(clamp_probability(p_fake));
}

double gen_loss_grad_fake(double p_fake, double alpha) {
  return clamped(p_fake) ? 0.0 : -alpha / p_fake;
}

double rmse(const PixelImage& truth, const PixelImage& output, const Mask& mask) {
  detail::check_same(truth.shape(), output.shape(), mask);
  const std::size_t support = mask.support_size();
  require(support > 0, "rmse needs a non-empty mask support");
  std::int64_t sum = 0;
  for (int y = 0; y < truth.height(); ++y) {
    for (int x = 0; x < truth.width(); ++x) {
      if (!mask(y, x)) continue;
      for (int c = 0; c < truth.channels(); ++c) {
        const int d = static_cast<int>(truth(y, x, c)) - static_cast<int>(output(y, x, c));
        sum += d * d;
      }
    }
  }
  return std::sqrt(static_cast<double>(sum) / static_cast<double>(support));
}

PixelImage renormalize(const ImageTensor& image) {
  PixelImage out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::floor(255.0 * static_cast<double>(image[i]) + 0.5);
    out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

}  // namespace outpaint
