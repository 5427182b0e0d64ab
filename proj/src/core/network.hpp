#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace outpaint {

enum class LayerKind { kConv, kDeconv, kDense, kOut, kConcat };
enum class Activation { kRelu, kSigmoid, kNone };
// kHalf encodes the 2x upsampling transposed convolution.
enum class Stride { kHalf, kOne, kTwo };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int filter = 1;
  int dilation = 1;
  Stride stride = Stride::kOne;
  int outputs = 0;
  Activation activation = Activation::kRelu;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class NetworkRole { kGenerator, kGlobalDiscriminator, kLocalDiscriminator, kConcatenator };

struct NetworkSpec {
  NetworkRole role = NetworkRole::kGenerator;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

using Dilations = std::array<int, 3>;
inline constexpr Dilations kDefaultDilations = {2, 4, 8};
inline constexpr int kFeatureWidth = 512;

NetworkSpec generator_spec(const Dilations& dilations = kDefaultDilations);

struct DiscriminatorSpecs {
  NetworkSpec global;
  NetworkSpec local;
  NetworkSpec concat;
};
// With `use_local` false the concatenator only sees the global features.
DiscriminatorSpecs discriminator_specs(bool use_local = true);

// Receptive field (px) after each layer, via r += (f - 1) * dilation * jump,
// jump *= stride. Dense/concat layers are rejected.
std::vector<double> receptive_field(const NetworkSpec& spec);

// Shape after each layer for the given input; throws on inconsistent specs.
std::vector<Shape> trace_shapes(const NetworkSpec& spec, Shape input);

// Human-readable layer table (Type f eta s n act).
std::string format_table(const NetworkSpec& spec);

void validate(const LayerSpec& layer);

template <typename T>
struct LayerParams {
  std::vector<int> weight_shape;
  Buffer<T> weight;
  Buffer<T> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
struct Params {
  std::vector<LayerParams<T>> layers;

  std::size_t count() const;
  // Same structure, all values zero.
  Params zeros_like() const;
  void set_zero();
  friend bool operator==(const Params&, const Params&) = default;
};

// Fan-in scaled zero-mean normal weights (He for relu layers, LeCun
// otherwise), zero biases. `input` fixes the dense-layer fan-in.
template <typename T>
Params<T> init_params(const NetworkSpec& spec, Shape input, std::uint64_t seed);

// FNV-1a over the raw bytes of every weight and bias.
template <typename T>
std::uint64_t params_hash(const Params<T>& params);

template <typename To, typename From>
Params<To> convert_params(const Params<From>& in) {
  Params<To> out;
  for (const auto& l : in.layers) {
    LayerParams<To> c;
    c.weight_shape = l.weight_shape;
    c.weight.assign(l.weight.begin(), l.weight.end());
    c.bias.assign(l.bias.begin(), l.bias.end());
    out.layers.push_back(std::move(c));
  }
  return out;
}

// Activations recorded by a forward pass: activations[0] is the input,
// activations[i + 1] the post-activation output of layer i.
template <typename T>
struct Trace {
  std::vector<Tensor<T>> activations;
};

// Sequential evaluation of a NetworkSpec. Read-only on params.
template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const Params<T>& params, const Tensor<T>& input,
                  Trace<T>* trace = nullptr);

// Back-propagates `grad_output` (gradient w.r.t. the final post-activation
// output). Parameter gradients are accumulated into `grads`; the gradient
// w.r.t. the input is returned when `want_input_grad` is set.
template <typename T>
Tensor<T> backward(const NetworkSpec& spec, const Params<T>& params, const Trace<T>& trace,
                   const Tensor<T>& grad_output, Params<T>& grads, bool want_input_grad);

// Left half, and right half mirrored so the outer strip sits at column 0.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_halves(const Tensor<T>& image);

template <typename T>
struct DiscriminatorBundle {
  Params<T> global;
  Params<T> local;  // shared by both halves; empty when disabled
  Params<T> concat;

  std::size_t count() const { return global.count() + local.count() + concat.count(); }
  DiscriminatorBundle zeros_like() const {
    return {global.zeros_like(), local.zeros_like(), concat.zeros_like()};
  }
  friend bool operator==(const DiscriminatorBundle&, const DiscriminatorBundle&) = default;
};

template <typename T>
struct DiscriminatorTrace {
  Trace<T> global;
  Trace<T> left;
  Trace<T> right;
  Trace<T> concat;
  Tensor<T> features;  // concatenated feature vector fed to the concatenator
};

// Global + optional local discriminator for images of a fixed shape.
class Discriminator {
 public:
  Discriminator(Shape image, bool use_local);
  Discriminator(Shape image, DiscriminatorSpecs specs, bool use_local);

  const DiscriminatorSpecs& specs() const { return specs_; }
  Shape image_shape() const { return image_; }
  bool use_local() const { return use_local_; }
  int feature_width() const;

  template <typename T>
  DiscriminatorBundle<T> init(std::uint64_t seed) const;

  // Probability that `image` is real, in (0,1).
  template <typename T>
  T forward(const DiscriminatorBundle<T>& bundle, const Tensor<T>& image,
            DiscriminatorTrace<T>* trace = nullptr) const;

  // grad_p is dL/dp. Accumulates parameter gradients into `grads` and
  // returns dL/dimage when requested.
  template <typename T>
  Tensor<T> backward(const DiscriminatorBundle<T>& bundle, const DiscriminatorTrace<T>& trace,
                     T grad_p, DiscriminatorBundle<T>& grads, bool want_input_grad) const;

 private:
  Shape image_;
  DiscriminatorSpecs specs_;
  bool use_local_;
};

}  // namespace outpaint
