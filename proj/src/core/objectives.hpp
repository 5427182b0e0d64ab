#pragma once

#include <cmath>
#include <span>

#include "preprocess.hpp"
#include "tensor.hpp"

namespace outpaint {

// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

namespace detail {
inline void check_same(const Shape& a, const Shape& b, const Mask& mask) {
  require(a == b, "loss operands have different shapes");
  require(a.height == mask.height() && a.width == mask.width(), "mask shape mismatch");
}
}  // namespace detail

// Sum of squared masked differences: ||M (.) (output - target)||^2.
template <typename T>
double mse_loss(const Tensor<T>& output, const Tensor<T>& target, const Mask& mask) {
  detail::check_same(output.shape(), target.shape(), mask);
  double sum = 0.0;
  for (int y = 0; y < output.height(); ++y) {
    for (int x = 0; x < output.width(); ++x) {
      if (!mask(y, x)) continue;
      for (int c = 0; c < output.channels(); ++c) {
        const double d = static_cast<double>(output(y, x, c)) - target(y, x, c);
        sum += d * d;
      }
    }
  }
  return sum;
}

// Gradient of scale * mse_loss with respect to `output`.
template <typename T>
Tensor<T> mse_loss_grad(const Tensor<T>& output, const Tensor<T>& target, const Mask& mask,
                        double scale = 1.0) {
  detail::check_same(output.shape(), target.shape(), mask);
  Tensor<T> grad(output.shape());
  for (int y = 0; y < output.height(); ++y) {
    for (int x = 0; x < output.width(); ++x) {
      if (!mask(y, x)) continue;
      for (int c = 0; c < output.channels(); ++c) {
        grad(y, x, c) = static_cast<T>(2.0 * scale *
                                       (static_cast<double>(output(y, x, c)) - target(y, x, c)));
      }
    }
  }
  return grad;
}

// Batch mean of the per-image masked squared-error sums.
template <typename T>
double mse_loss(std::span<const Tensor<T>> outputs, std::span<const Tensor<T>> targets,
                const Mask& mask) {
  require(outputs.size() == targets.size() && !outputs.empty(), "batch sizes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) total += mse_loss(outputs[i], targets[i], mask);
  return total / static_cast<double>(outputs.size());
}

// -[log p_real + log(1 - p_fake)]
double disc_loss(double p_real, double p_fake);
// d disc_loss / d p_real and d disc_loss / d p_fake (zero where clamped).
double disc_loss_grad_real(double p_real);
double disc_loss_grad_fake(double p_fake);

// mse - alpha * log p_fake
double gen_loss(double mse, double p_fake, double alpha);
// d gen_loss / d p_fake (zero where clamped).
double gen_loss_grad_fake(double p_fake, double alpha);

// sqrt( sum_{i,j,k} (M (.) (truth - output))^2 / |supp(M)| ). The sum runs
// over all channels but the normalizer counts pixels, not elements.
double rmse(const PixelImage& truth, const PixelImage& output, const Mask& mask);

// Real-valued variant of rmse, for values already on any common scale.
template <typename T>
double rmse_real(const Tensor<T>& truth, const Tensor<T>& output, const Mask& mask) {
  const std::size_t support = mask.support_size();
  require(support > 0, "rmse needs a non-empty mask support");
  return std::sqrt(mse_loss(truth, output, mask) / static_cast<double>(support));
}

// round(255 * v), half-up, clamped to [0,255].
PixelImage renormalize(const ImageTensor& image);

}  // namespace outpaint
