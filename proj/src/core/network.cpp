#include "network.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <iomanip>

#include "conv.hpp"

namespace outpaint {
namespace {

LayerSpec conv(int filter, int dilation, Stride stride, int outputs,
               Activation act = Activation::kRelu) {
  return LayerSpec{LayerKind::kConv, filter, dilation, stride, outputs, act};
}

int stride_factor(Stride s) { return s == Stride::kTwo ? 2 : 1; }

const char* kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "CONV";
    case LayerKind::kDeconv: return "DECONV";
    case LayerKind::kDense: return "FC";
    case LayerKind::kOut: return "OUT";
    case LayerKind::kConcat: return "concat";
  }
  return "?";
}

const char* stride_name(Stride s) {
  switch (s) {
    case Stride::kHalf: return "1/2";
    case Stride::kOne: return "1";
    case Stride::kTwo: return "2";
  }
  return "?";
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kNone: return "none";
  }
  return "?";
}

bool is_spatial(LayerKind kind) {
  return kind == LayerKind::kConv || kind == LayerKind::kOut || kind == LayerKind::kDeconv;
}

ConvGeometry layer_geometry(const LayerSpec& layer, Shape in) {
  if (layer.kind == LayerKind::kDeconv) return upsample_geometry(in, layer.filter, layer.outputs);
  return same_conv_geometry(in, layer.filter, layer.dilation, stride_factor(layer.stride),
                            layer.outputs);
}

Shape layer_output(const LayerSpec& layer, Shape in) {
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kOut:
      return layer_geometry(layer, in).output;
    case LayerKind::kDeconv:
      return layer_geometry(layer, in).input;
    case LayerKind::kDense:
      return Shape{1, 1, layer.outputs};
    case LayerKind::kConcat:
      require(static_cast<int>(in.size()) == layer.outputs,
              "concat layer expects " + std::to_string(layer.outputs) + " inputs, got " +
                  std::to_string(in.size()));
      return Shape{1, 1, layer.outputs};
  }
  return in;
}

std::vector<int> weight_shape(const LayerSpec& layer, Shape in) {
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kOut:
      return {layer.filter, layer.filter, in.channels, layer.outputs};
    case LayerKind::kDeconv:
      return {layer.filter, layer.filter, layer.outputs, in.channels};
    case LayerKind::kDense:
      return {static_cast<int>(in.size()), layer.outputs};
    case LayerKind::kConcat:
      return {};
  }
  return {};
}

double fan_in(const LayerSpec& layer, Shape in) {
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kOut:
      return static_cast<double>(layer.filter) * layer.filter * in.channels;
    // Each output pixel of a stride-2 transposed conv sees f*f/4 taps.
    case LayerKind::kDeconv:
      return std::max(1.0, static_cast<double>(layer.filter) * layer.filter * in.channels / 4.0);
    case LayerKind::kDense:
      return static_cast<double>(in.size());
    case LayerKind::kConcat:
      return 1.0;
  }
  return 1.0;
}

template <typename T>
void apply_activation(Activation act, Tensor<T>& t) {
  if (act == Activation::kRelu) {
    for (auto& v : t.values()) v = v > T{0} ? v : T{0};
  } else if (act == Activation::kSigmoid) {
    for (auto& v : t.values()) v = T{1} / (T{1} + std::exp(-v));
  }
}

// Turns a gradient w.r.t. the post-activation output into one w.r.t. the
// pre-activation value, using only the stored output.
template <typename T>
void activation_backward(Activation act, const Tensor<T>& output, Tensor<T>& grad) {
  if (act == Activation::kRelu) {
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (!(output[i] > T{0})) grad[i] = T{0};
  } else if (act == Activation::kSigmoid) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= output[i] * (T{1} - output[i]);
  }
}

void check_params(const NetworkSpec& spec, std::size_t layers) {
  require(layers == spec.layers.size(), "parameter count does not match network spec (" +
                                            std::to_string(layers) + " vs " +
                                            std::to_string(spec.layers.size()) + " layers)");
}

void check_weights(const std::vector<int>& expected, const std::vector<int>& actual,
                   std::size_t layer) {
  require(expected == actual,
          "weight shape mismatch at layer " + std::to_string(layer) + " for this input");
}

}  // namespace

void validate(const LayerSpec& layer) {
  require(layer.filter >= 1, "filter size must be >= 1");
  require(layer.dilation >= 1, "dilation must be >= 1");
  require(layer.outputs >= 1, "layer must have at least one output");
  require((layer.kind == LayerKind::kDeconv) == (layer.stride == Stride::kHalf),
          "stride 1/2 is used exactly by DECONV layers");
}

NetworkSpec generator_spec(const Dilations& dilations) {
  for (int d : dilations) require(d >= 1, "dilations must be positive");
  NetworkSpec spec;
  spec.role = NetworkRole::kGenerator;
  spec.layers = {
      conv(5, 1, Stride::kOne, 64),
      conv(3, 1, Stride::kTwo, 128),
      conv(3, 1, Stride::kOne, 256),
      conv(3, dilations[0], Stride::kOne, 256),
      conv(3, dilations[1], Stride::kOne, 256),
      conv(3, dilations[2], Stride::kOne, 256),
      conv(3, 1, Stride::kOne, 256),
      LayerSpec{LayerKind::kDeconv, 4, 1, Stride::kHalf, 128, Activation::kRelu},
      conv(3, 1, Stride::kOne, 64),
      LayerSpec{LayerKind::kOut, 3, 1, Stride::kOne, 3, Activation::kSigmoid},
  };
  return spec;
}

DiscriminatorSpecs discriminator_specs(bool use_local) {
  DiscriminatorSpecs specs;
  specs.global.role = NetworkRole::kGlobalDiscriminator;
  for (int n : {32, 64, 64, 64, 64}) specs.global.layers.push_back(conv(5, 1, Stride::kTwo, n));
  specs.global.layers.push_back(
      LayerSpec{LayerKind::kDense, 1, 1, Stride::kOne, kFeatureWidth, Activation::kRelu});

  specs.local.role = NetworkRole::kLocalDiscriminator;
  for (int n : {32, 64, 64, 64}) specs.local.layers.push_back(conv(5, 1, Stride::kTwo, n));
  specs.local.layers.push_back(
      LayerSpec{LayerKind::kDense, 1, 1, Stride::kOne, kFeatureWidth, Activation::kRelu});

  specs.concat.role = NetworkRole::kConcatenator;
  specs.concat.layers = {
      LayerSpec{LayerKind::kConcat, 1, 1, Stride::kOne, kFeatureWidth * (use_local ? 3 : 1),
                Activation::kNone},
      LayerSpec{LayerKind::kDense, 1, 1, Stride::kOne, 1, Activation::kSigmoid},
  };
  return specs;
}

std::vector<double> receptive_field(const NetworkSpec& spec) {
  std::vector<double> out;
  double field = 1.0;
  double jump = 1.0;
  for (const auto& layer : spec.layers) {
    require(is_spatial(layer.kind), "receptive field is defined for convolutional layers only");
    field += (layer.filter - 1) * layer.dilation * jump;
    switch (layer.stride) {
      case Stride::kHalf: jump *= 0.5; break;
      case Stride::kOne: break;
      case Stride::kTwo: jump *= 2.0; break;
    }
    out.push_back(field);
  }
  return out;
}

std::vector<Shape> trace_shapes(const NetworkSpec& spec, Shape input) {
  std::vector<Shape> shapes;
  Shape cur = input;
  for (const auto& layer : spec.layers) {
    validate(layer);
    cur = layer_output(layer, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

std::string format_table(const NetworkSpec& spec) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "Type" << std::setw(4) << "f" << std::setw(4) << "eta"
     << std::setw(5) << "s" << std::setw(6) << "n" << "act\n";
  for (const auto& l : spec.layers) {
    const bool spatial = is_spatial(l.kind);
    os << std::setw(8) << kind_name(l.kind) << std::setw(4)
       << (spatial ? std::to_string(l.filter) : "-") << std::setw(4)
       << (spatial ? std::to_string(l.dilation) : "-") << std::setw(5)
       << (spatial ? stride_name(l.stride) : "-") << std::setw(6) << l.outputs
       << activation_name(l.activation) << "\n";
  }
  return os.str();
}

template <typename T>
std::size_t Params<T>::count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

template <typename T>
Params<T> Params<T>::zeros_like() const {
  Params<T> out = *this;
  out.set_zero();
  return out;
}

template <typename T>
void Params<T>::set_zero() {
  for (auto& l : layers) {
    std::fill(l.weight.begin(), l.weight.end(), T{0});
    std::fill(l.bias.begin(), l.bias.end(), T{0});
  }
}

template <typename T>
Params<T> init_params(const NetworkSpec& spec, Shape input, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Params<T> params;
  Shape cur = input;
  for (const auto& layer : spec.layers) {
    validate(layer);
    LayerParams<T> lp;
    lp.weight_shape = weight_shape(layer, cur);
    if (layer.kind != LayerKind::kConcat) {
      std::size_t n = 1;
      for (int d : lp.weight_shape) n *= static_cast<std::size_t>(d);
      const double gain = layer.activation == Activation::kRelu ? 2.0 : 1.0;
      std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in(layer, cur)));
      lp.weight.resize(n);
      for (auto& w : lp.weight) w = static_cast<T>(dist(rng));
      lp.bias.assign(static_cast<std::size_t>(layer.outputs), T{0});
    }
    params.layers.push_back(std::move(lp));
    cur = layer_output(layer, cur);
  }
  return params;
}

template <typename T>
std::uint64_t params_hash(const Params<T>& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& l : params.layers) {
    mix(l.weight.data(), l.weight.size() * sizeof(T));
    mix(l.bias.data(), l.bias.size() * sizeof(T));
  }
  return h;
}

template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const Params<T>& params, const Tensor<T>& input,
                  Trace<T>* trace) {
  check_params(spec, params.layers.size());
  Buffer<T> scratch;
  if (trace != nullptr) {
    trace->activations.clear();
    trace->activations.push_back(input);
  }
  Tensor<T> cur = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const LayerParams<T>& lp = params.layers[i];
    validate(layer);
    check_weights(weight_shape(layer, cur.shape()), lp.weight_shape, i);
    Tensor<T> next(layer_output(layer, cur.shape()));
    switch (layer.kind) {
      case LayerKind::kConv:
      case LayerKind::kOut:
        conv2d_forward(layer_geometry(layer, cur.shape()), cur.data(), lp.weight.data(),
                       lp.bias.data(), next.data(), scratch);
        break;
      case LayerKind::kDeconv:
        conv2d_transpose_forward(layer_geometry(layer, cur.shape()), cur.data(),
                                 lp.weight.data(), lp.bias.data(), next.data(), scratch);
        break;
      case LayerKind::kDense:
        dense_forward(static_cast<int>(cur.size()), layer.outputs, cur.data(), lp.weight.data(),
                      lp.bias.data(), next.data());
        break;
      case LayerKind::kConcat:
        std::copy(cur.values().begin(), cur.values().end(), next.values().begin());
        break;
    }
    apply_activation(layer.activation, next);
    if (trace != nullptr) trace->activations.push_back(next);
    cur = std::move(next);
  }
  return cur;
}

template <typename T>
Tensor<T> backward(const NetworkSpec& spec, const Params<T>& params, const Trace<T>& trace,
                   const Tensor<T>& grad_output, Params<T>& grads, bool want_input_grad) {
  check_params(spec, params.layers.size());
  check_params(spec, grads.layers.size());
  require(trace.activations.size() == spec.layers.size() + 1, "trace does not match spec");
  require(grad_output.shape() == trace.activations.back().shape(),
          "output gradient shape mismatch");
  Buffer<T> scratch;
  Tensor<T> grad = grad_output;
  for (std::size_t idx = spec.layers.size(); idx-- > 0;) {
    const LayerSpec& layer = spec.layers[idx];
    const LayerParams<T>& lp = params.layers[idx];
    LayerParams<T>& gp = grads.layers[idx];
    const Tensor<T>& in = trace.activations[idx];
    activation_backward(layer.activation, trace.activations[idx + 1], grad);
    const bool need_input = want_input_grad || idx > 0;
    Tensor<T> grad_in;
    if (need_input) grad_in = Tensor<T>(in.shape());
    T* gin = need_input ? grad_in.data() : nullptr;
    switch (layer.kind) {
      case LayerKind::kConv:
      case LayerKind::kOut:
        conv2d_backward(layer_geometry(layer, in.shape()), in.data(), lp.weight.data(),
                        grad.data(), gin, gp.weight.data(), gp.bias.data(), scratch);
        break;
      case LayerKind::kDeconv:
        conv2d_transpose_backward(layer_geometry(layer, in.shape()), in.data(),
                                  lp.weight.data(), grad.data(), gin, gp.weight.data(),
                                  gp.bias.data(), scratch);
        break;
      case LayerKind::kDense:
        dense_backward(static_cast<int>(in.size()), layer.outputs, in.data(), lp.weight.data(),
                       grad.data(), gin, gp.weight.data(), gp.bias.data());
        break;
      case LayerKind::kConcat:
        if (gin != nullptr) std::copy(grad.values().begin(), grad.values().end(), gin);
        break;
    }
    grad = std::move(grad_in);
  }
  return grad;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_halves(const Tensor<T>& image) {
  require(image.width() >= 2 && image.width() % 2 == 0, "split_halves needs an even width");
  const int half = image.width() / 2;
  const int c = image.channels();
  Tensor<T> left(image.height(), half, c);
  Tensor<T> right(image.height(), half, c);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < half; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        left(y, x, ch) = image(y, x, ch);
        right(y, x, ch) = image(y, image.width() - 1 - x, ch);
      }
    }
  }
  return {std::move(left), std::move(right)};
}

Discriminator::Discriminator(Shape image, bool use_local)
    : Discriminator(image, discriminator_specs(use_local), use_local) {}

Discriminator::Discriminator(Shape image, DiscriminatorSpecs specs, bool use_local)
    : image_(image), specs_(std::move(specs)), use_local_(use_local) {
  require(image.channels == 3, "discriminator expects RGB images");
  require(!use_local || image.width % 2 == 0, "local discriminator needs an even width");
  const Shape g = trace_shapes(specs_.global, image).back();
  int width = static_cast<int>(g.size());
  if (use_local_) {
    const Shape l = trace_shapes(specs_.local, Shape{image.height, image.width / 2, 3}).back();
    require(l.size() == g.size(), "global and local feature widths differ");
    width += 2 * static_cast<int>(l.size());
  }
  require(specs_.concat.layers.front().kind == LayerKind::kConcat &&
              specs_.concat.layers.front().outputs == width,
          "concatenator width " + std::to_string(specs_.concat.layers.front().outputs) +
              " does not match features " + std::to_string(width));
  require(trace_shapes(specs_.concat, Shape{1, 1, width}).back().size() == 1,
          "concatenator must produce a single probability");
}

int Discriminator::feature_width() const { return specs_.concat.layers.front().outputs; }

template <typename T>
DiscriminatorBundle<T> Discriminator::init(std::uint64_t seed) const {
  DiscriminatorBundle<T> bundle;
  bundle.global = init_params<T>(specs_.global, image_, seed);
  if (use_local_) {
    bundle.local = init_params<T>(specs_.local, Shape{image_.height, image_.width / 2, 3},
                                  seed + 0x9e3779b97f4a7c15ull);
  }
  bundle.concat =
      init_params<T>(specs_.concat, Shape{1, 1, feature_width()}, seed + 0x3c6ef372fe94f82aull);
  return bundle;
}

template <typename T>
T Discriminator::forward(const DiscriminatorBundle<T>& bundle, const Tensor<T>& image,
                         DiscriminatorTrace<T>* trace) const {
  require(image.shape() == image_,
          "discriminator expects " + std::to_string(image_.height) + "x" +
              std::to_string(image_.width) + "x3 input, got " + std::to_string(image.height()) +
              "x" + std::to_string(image.width()) + "x" + std::to_string(image.channels()));
  Tensor<T> features(1, 1, feature_width());
  T* dst = features.data();
  auto append = [&dst](const Tensor<T>& t) { dst = std::copy(t.data(), t.data() + t.size(), dst); };

  append(outpaint::forward(specs_.global, bundle.global, image,
                           trace ? &trace->global : nullptr));
  if (use_local_) {
    auto [left, right] = split_halves(image);
    append(outpaint::forward(specs_.local, bundle.local, left, trace ? &trace->left : nullptr));
    append(outpaint::forward(specs_.local, bundle.local, right, trace ? &trace->right : nullptr));
  }
  Tensor<T> p =
      outpaint::forward(specs_.concat, bundle.concat, features, trace ? &trace->concat : nullptr);
  if (trace != nullptr) trace->features = std::move(features);
  return p[0];
}

template <typename T>
Tensor<T> Discriminator::backward(const DiscriminatorBundle<T>& bundle,
                                  const DiscriminatorTrace<T>& trace, T grad_p,
                                  DiscriminatorBundle<T>& grads, bool want_input_grad) const {
  Tensor<T> dp(1, 1, 1, grad_p);
  Tensor<T> dfeat = outpaint::backward(specs_.concat, bundle.concat, trace.concat, dp,
                                       grads.concat, true);
  const Shape global_out = trace.global.activations.back().shape();
  const std::size_t n = global_out.size();
  auto slice = [&dfeat, n](std::size_t part, Shape shape) {
    Tensor<T> t(shape);
    std::copy(dfeat.data() + part * n, dfeat.data() + (part + 1) * n, t.data());
    return t;
  };

  Tensor<T> dimage = outpaint::backward(specs_.global, bundle.global, trace.global,
                                        slice(0, global_out), grads.global, want_input_grad);
  if (use_local_) {
    const Shape local_out = trace.left.activations.back().shape();
    Tensor<T> dleft = outpaint::backward(specs_.local, bundle.local, trace.left,
                                         slice(1, local_out), grads.local, want_input_grad);
    Tensor<T> dright = outpaint::backward(specs_.local, bundle.local, trace.right,
                                          slice(2, local_out), grads.local, want_input_grad);
    if (want_input_grad) {
      const int half = image_.width / 2;
      for (int y = 0; y < image_.height; ++y) {
        for (int x = 0; x < half; ++x) {
          for (int c = 0; c < 3; ++c) {
            dimage(y, x, c) += dleft(y, x, c);
            dimage(y, image_.width - 1 - x, c) += dright(y, x, c);
          }
        }
      }
    }
  }
  return dimage;
}

#define OUTPAINT_INSTANTIATE_NETWORK(T)                                                     \
  template struct Params<T>;                                                                \
  template Params<T> init_params<T>(const NetworkSpec&, Shape, std::uint64_t);              \
  template std::uint64_t params_hash<T>(const Params<T>&);                                  \
  template Tensor<T> forward<T>(const NetworkSpec&, const Params<T>&, const Tensor<T>&,     \
                                Trace<T>*);                                                 \
  template Tensor<T> backward<T>(const NetworkSpec&, const Params<T>&, const Trace<T>&,     \
                                 const Tensor<T>&, Params<T>&, bool);                       \
  template std::pair<Tensor<T>, Tensor<T>> split_halves<T>(const Tensor<T>&);               \
  template DiscriminatorBundle<T> Discriminator::init<T>(std::uint64_t) const;              \
  template T Discriminator::forward<T>(const DiscriminatorBundle<T>&, const Tensor<T>&,     \
                                       DiscriminatorTrace<T>*) const;                       \
  template Tensor<T> Discriminator::backward<T>(const DiscriminatorBundle<T>&,              \
                                                const DiscriminatorTrace<T>&, T,            \
                                                DiscriminatorBundle<T>&, bool) const;

OUTPAINT_INSTANTIATE_NETWORK(float)
OUTPAINT_INSTANTIATE_NETWORK(double)

#undef OUTPAINT_INSTANTIATE_NETWORK

}  // namespace outpaint
