// Reference implementations used to check the library. None of them share
// code with the routines they verify.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "network.hpp"
#include "preprocess.hpp"
#include "tensor.hpp"

namespace oracle {

using outpaint::Mask;
using outpaint::PixelImage;

// Plain triple loop: sqrt(sum over masked pixels and channels / #masked pixels).
inline double naive_rmse(const PixelImage& truth, const PixelImage& out, const Mask& mask) {
  long double sum = 0;
  long double pixels = 0;
  for (int i = 0; i < truth.height(); ++i) {
    for (int j = 0; j < truth.width(); ++j) {
      if (mask(i, j) == 0) continue;
      pixels += 1;
      for (int k = 0; k < truth.channels(); ++k) {
        const long double d = static_cast<long double>(truth(i, j, k)) - out(i, j, k);
        sum += d * d;
      }
    }
  }
  return static_cast<double>(std::sqrt(sum / pixels));
}

// Pixels solved for by the blend: mask == 0 over the whole 3x3 neighbourhood
// and not on the image border.
inline std::vector<std::pair<int, int>> eroded_region(const Mask& mask) {
  std::vector<std::pair<int, int>> region;
  for (int y = 1; y + 1 < mask.height(); ++y) {
    for (int x = 1; x + 1 < mask.width(); ++x) {
      bool inside = true;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) inside = inside && mask(y + dy, x + dx) == 0;
      if (inside) region.emplace_back(y, x);
    }
  }
  return region;
}

// Dense direct solve of the per-channel Poisson system with source-gradient
// guidance and destination boundary values. Returns the real-valued result
// (destination values outside the region).
inline outpaint::Tensor<double> dense_poisson(const PixelImage& source, const PixelImage& dest,
                                              const Mask& mask) {
  const auto region = eroded_region(mask);
  outpaint::Tensor<double> out = outpaint::tensor_cast<double>(dest);
  const int n = static_cast<int>(region.size());
  if (n == 0) return out;
  std::vector<int> index(static_cast<std::size_t>(mask.height()) * mask.width(), -1);
  for (int i = 0; i < n; ++i) index[region[i].first * mask.width() + region[i].second] = i;

  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  for (int c = 0; c < source.channels(); ++c) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const auto [y, x] = region[i];
      a(i, i) = 4.0;
      for (int t = 0; t < 4; ++t) {
        const int ny = y + dy[t];
        const int nx = x + dx[t];
        b(i) += static_cast<double>(source(y, x, c)) - source(ny, nx, c);
        const int j = index[ny * mask.width() + nx];
        if (j >= 0)
          a(i, j) -= 1.0;
        else
          b(i) += dest(ny, nx, c);
      }
    }
    const Eigen::VectorXd f = a.fullPivLu().solve(b);
    for (int i = 0; i < n; ++i) out(region[i].first, region[i].second, c) = f(i);
  }
  return out;
}

// Receptive field by explicit dependency tracing in one dimension: walk the
// taps of every layer back from one output neuron and count the distinct
// input positions reached. Handles stride 1 and 2 convolutions.
inline int traced_receptive_field(const std::vector<outpaint::LayerSpec>& layers) {
  std::set<long> positions = {0};
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    const int stride = it->stride == outpaint::Stride::kTwo ? 2 : 1;
    std::set<long> below;
    for (long p : positions)
      for (int t = 0; t < it->filter; ++t) below.insert(p * stride + t * it->dilation);
    positions = std::move(below);
  }
  return static_cast<int>(*positions.rbegin() - *positions.begin() + 1);
}

// ---- miniature networks for gradient checks ----

inline outpaint::NetworkSpec mini_generator() {
  using namespace outpaint;
  NetworkSpec s;
  s.role = NetworkRole::kGenerator;
  s.layers = {
      {LayerKind::kConv, 3, 1, Stride::kOne, 4, Activation::kRelu},
      {LayerKind::kConv, 3, 1, Stride::kTwo, 6, Activation::kRelu},
      {LayerKind::kConv, 3, 2, Stride::kOne, 6, Activation::kRelu},
      {LayerKind::kDeconv, 4, 1, Stride::kHalf, 4, Activation::kRelu},
      {LayerKind::kOut, 3, 1, Stride::kOne, 3, Activation::kSigmoid},
  };
  return s;
}

inline outpaint::DiscriminatorSpecs mini_discriminator(bool use_local) {
  using namespace outpaint;
  DiscriminatorSpecs d;
  d.global.role = NetworkRole::kGlobalDiscriminator;
  d.global.layers = {
      {LayerKind::kConv, 3, 1, Stride::kTwo, 4, Activation::kRelu},
      {LayerKind::kConv, 3, 1, Stride::kTwo, 4, Activation::kRelu},
      {LayerKind::kDense, 1, 1, Stride::kOne, 6, Activation::kRelu},
  };
  d.local.role = NetworkRole::kLocalDiscriminator;
  d.local.layers = {
      {LayerKind::kConv, 3, 1, Stride::kTwo, 4, Activation::kRelu},
      {LayerKind::kConv, 3, 1, Stride::kTwo, 4, Activation::kRelu},
      {LayerKind::kDense, 1, 1, Stride::kOne, 6, Activation::kRelu},
  };
  d.concat.role = NetworkRole::kConcatenator;
  d.concat.layers = {
      {LayerKind::kConcat, 1, 1, Stride::kOne, use_local ? 18 : 6, Activation::kNone},
      {LayerKind::kDense, 1, 1, Stride::kOne, 1, Activation::kSigmoid},
  };
  return d;
}

// ---- finite differences ----

struct GradCheck {
  int sampled = 0;
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
};

// Relative error |a - n| / max(|a|, |n|), with a floor on the denominator so
// gradients that are both essentially zero compare as equal.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences on `samples` parameters chosen uniformly from all
// weights and biases of `params`.
inline GradCheck check_gradients(outpaint::Params<double>& params,
                                 const outpaint::Params<double>& analytic,
                                 const std::function<double()>& loss, int samples,
                                 std::uint64_t seed, double h = 1e-6) {
  std::vector<double*> slots;
  std::vector<double> grads;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = analytic.layers[l];
    for (std::size_t i = 0; i < p.weight.size(); ++i) {
      slots.push_back(&p.weight[i]);
      grads.push_back(g.weight[i]);
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      slots.push_back(&p.bias[i]);
      grads.push_back(g.bias[i]);
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
  GradCheck out;
  for (int s = 0; s < samples; ++s) {
    const std::size_t k = pick(rng);
    const double saved = *slots[k];
    *slots[k] = saved + h;
    const double up = loss();
    *slots[k] = saved - h;
    const double down = loss();
    *slots[k] = saved;
    const double numeric = (up - down) / (2 * h);
    out.max_relative_error = std::max(out.max_relative_error, relative_error(grads[k], numeric));
    out.max_abs_analytic = std::max(out.max_abs_analytic, std::abs(grads[k]));
    ++out.sampled;
  }
  return out;
}

template <typename T>
outpaint::Tensor<T> random_tensor(outpaint::Shape shape, std::uint64_t seed, double lo = 0.0,
                                  double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  outpaint::Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(u(rng));
  return t;
}

inline PixelImage random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  PixelImage img(h, w, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(u(rng));
  return img;
}

}  // namespace oracle
