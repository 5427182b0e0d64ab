#pragma once

#include <cmath>
#include <cstdint>

#include "network.hpp"

namespace outpaint {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  Params<T> first;
  Params<T> second;
  std::int64_t steps = 0;

  static AdamState like(const Params<T>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

namespace detail {
template <typename T>
void adam_update(Buffer<T>& value, const Buffer<T>& grad, Buffer<T>& m,
                 Buffer<T>& v, const AdamConfig& cfg, double step_size) {
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T eps = static_cast<T>(cfg.epsilon);
  const T lr = static_cast<T>(step_size);
  for (std::size_t i = 0; i < value.size(); ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * grad[i];
    v[i] = b2 * v[i] + (T{1} - b2) * grad[i] * grad[i];
    value[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
  }
}
}  // namespace detail

// One bias-corrected Adam step.
template <typename T>
void adam_step(Params<T>& params, const Params<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  require(params.layers.size() == grads.layers.size() &&
              params.layers.size() == state.first.layers.size(),
          "optimizer state does not match parameters");
  ++state.steps;
  const double t = static_cast<double>(state.steps);
  const double step_size = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.beta2, t)) /
                           (1.0 - std::pow(cfg.beta1, t));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    detail::adam_update(params.layers[l].weight, grads.layers[l].weight,
                        state.first.layers[l].weight, state.second.layers[l].weight, cfg,
                        step_size);
    detail::adam_update(params.layers[l].bias, grads.layers[l].bias, state.first.layers[l].bias,
                        state.second.layers[l].bias, cfg, step_size);
  }
}

}  // namespace outpaint
