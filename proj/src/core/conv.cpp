#include "conv.hpp"

#include <algorithm>
#include <cstring>

#include <Eigen/Core>

namespace outpaint {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using RowVectorMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstRowVectorMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

int same_padding(int in, int out, int stride, int effective_filter) {
  return std::max((out - 1) * stride + effective_filter - in, 0);
}

// Rows are output pixels, columns are (ky, kx, channel) taps of g.input.
template <typename T>
void im2col(const ConvGeometry& g, const T* input, T* cols) {
  const int in_h = g.input.height;
  const int in_w = g.input.width;
  const int c = g.input.channels;
  const int f = g.filter;
  const std::size_t row_len = static_cast<std::size_t>(g.patch_size());
  for (int oy = 0; oy < g.output.height; ++oy) {
    for (int ox = 0; ox < g.output.width; ++ox) {
      T* row = cols + (static_cast<std::size_t>(oy) * g.output.width + ox) * row_len;
      for (int ky = 0; ky < f; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky * g.dilation;
        for (int kx = 0; kx < f; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx * g.dilation;
          T* dst = row + (static_cast<std::size_t>(ky) * f + kx) * c;
          if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) {
            std::fill(dst, dst + c, T{0});
          } else {
            const T* src = input + (static_cast<std::size_t>(iy) * in_w + ix) * c;
            std::memcpy(dst, src, sizeof(T) * c);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column entries back onto g.input (overwrites).
template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const int in_h = g.input.height;
  const int in_w = g.input.width;
  const int c = g.input.channels;
  const int f = g.filter;
  std::fill(image, image + g.input.size(), T{0});
  const std::size_t row_len = static_cast<std::size_t>(g.patch_size());
  for (int oy = 0; oy < g.output.height; ++oy) {
    for (int ox = 0; ox < g.output.width; ++ox) {
      const T* row = cols + (static_cast<std::size_t>(oy) * g.output.width + ox) * row_len;
      for (int ky = 0; ky < f; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky * g.dilation;
        if (iy < 0 || iy >= in_h) continue;
        for (int kx = 0; kx < f; ++kx) {
          const int ix = ox * g.stride - g.pad_left + kx * g.dilation;
          if (ix < 0 || ix >= in_w) continue;
          const T* src = row + (static_cast<std::size_t>(ky) * f + kx) * c;
          T* dst = image + (static_cast<std::size_t>(iy) * in_w + ix) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

template <typename T>
T* scratch_buffer(Buffer<T>& scratch, std::size_t n) {
  if (scratch.size() < n) scratch.resize(n);
  return scratch.data();
}

}  // namespace

ConvGeometry same_conv_geometry(Shape input, int filter, int dilation, int stride,
                                int outputs) {
  require(filter >= 1 && dilation >= 1 && stride >= 1, "invalid convolution parameters");
  require(input.height >= 1 && input.width >= 1, "convolution input must be non-empty");
  ConvGeometry g;
  g.input = input;
  g.filter = filter;
  g.dilation = dilation;
  g.stride = stride;
  g.output = Shape{(input.height + stride - 1) / stride, (input.width + stride - 1) / stride,
                   outputs};
  const int effective = (filter - 1) * dilation + 1;
  g.pad_top = same_padding(input.height, g.output.height, stride, effective) / 2;
  g.pad_left = same_padding(input.width, g.output.width, stride, effective) / 2;
  return g;
}

ConvGeometry upsample_geometry(Shape small, int filter, int outputs) {
  require(filter >= 2 && filter % 2 == 0, "transposed convolution filter must be even");
  ConvGeometry g;
  g.input = Shape{small.height * 2, small.width * 2, outputs};
  g.output = small;
  g.filter = filter;
  g.stride = 2;
  g.pad_top = (filter - 2) / 2;
  g.pad_left = (filter - 2) / 2;
  return g;
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight,
                    const T* bias, T* output, Buffer<T>& scratch) {
  const int rows = g.output_pixels();
  const int k = g.patch_size();
  const int n = g.output.channels;
  T* cols = scratch_buffer(scratch, static_cast<std::size_t>(rows) * k);
  im2col(g, input, cols);
  MatrixMap<T> out(output, rows, n);
  out.noalias() = ConstMatrixMap<T>(cols, rows, k) * ConstMatrixMap<T>(weight, k, n);
  out.rowwise() += ConstRowVectorMap<T>(bias, n);
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* grad_output, T* grad_input, T* grad_weight,
                     T* grad_bias, Buffer<T>& scratch) {
  const int rows = g.output_pixels();
  const int k = g.patch_size();
  const int n = g.output.channels;
  T* cols = scratch_buffer(scratch, static_cast<std::size_t>(rows) * k);
  ConstMatrixMap<T> dy(grad_output, rows, n);
  im2col(g, input, cols);
  MatrixMap<T>(grad_weight, k, n).noalias() +=
      ConstMatrixMap<T>(cols, rows, k).transpose() * dy;
  RowVectorMap<T>(grad_bias, n) += dy.colwise().sum();
  if (grad_input != nullptr) {
    MatrixMap<T>(cols, rows, k).noalias() = dy * ConstMatrixMap<T>(weight, k, n).transpose();
    col2im(g, cols, grad_input);
  }
}

template <typename T>
void conv2d_transpose_forward(const ConvGeometry& g, const T* input, const T* weight,
                              const T* bias, T* output, Buffer<T>& scratch) {
  const int rows = g.output_pixels();
  const int k = g.patch_size();
  const int in_c = g.output.channels;
  T* cols = scratch_buffer(scratch, static_cast<std::size_t>(rows) * k);
  MatrixMap<T>(cols, rows, k).noalias() =
      ConstMatrixMap<T>(input, rows, in_c) * ConstMatrixMap<T>(weight, k, in_c).transpose();
  col2im(g, cols, output);
  MatrixMap<T>(output, g.input.height * g.input.width, g.input.channels).rowwise() +=
      ConstRowVectorMap<T>(bias, g.input.channels);
}

template <typename T>
void conv2d_transpose_backward(const ConvGeometry& g, const T* input, const T* weight,
                               const T* grad_output, T* grad_input, T* grad_weight,
                               T* grad_bias, Buffer<T>& scratch) {
  const int rows = g.output_pixels();
  const int k = g.patch_size();
  const int in_c = g.output.channels;
  T* cols = scratch_buffer(scratch, static_cast<std::size_t>(rows) * k);
  im2col(g, grad_output, cols);
  ConstMatrixMap<T> dcols(cols, rows, k);
  MatrixMap<T>(grad_weight, k, in_c).noalias() +=
      dcols.transpose() * ConstMatrixMap<T>(input, rows, in_c);
  RowVectorMap<T>(grad_bias, g.input.channels) +=
      ConstMatrixMap<T>(grad_output, g.input.height * g.input.width, g.input.channels)
          .colwise()
          .sum();
  if (grad_input != nullptr) {
    MatrixMap<T>(grad_input, rows, in_c).noalias() = dcols * ConstMatrixMap<T>(weight, k, in_c);
  }
}

template <typename T>
void dense_forward(int in, int out, const T* input, const T* weight, const T* bias,
                   T* output) {
  RowVectorMap<T> y(output, out);
  y.noalias() = ConstRowVectorMap<T>(input, in) * ConstMatrixMap<T>(weight, in, out);
  y += ConstRowVectorMap<T>(bias, out);
}

template <typename T>
void dense_backward(int in, int out, const T* input, const T* weight,
                    const T* grad_output, T* grad_input, T* grad_weight, T* grad_bias) {
  ConstRowVectorMap<T> dy(grad_output, out);
  MatrixMap<T>(grad_weight, in, out).noalias() +=
      ConstRowVectorMap<T>(input, in).transpose() * dy;
  RowVectorMap<T>(grad_bias, out) += dy;
  if (grad_input != nullptr) {
    RowVectorMap<T>(grad_input, in).noalias() =
        dy * ConstMatrixMap<T>(weight, in, out).transpose();
  }
}

#define OUTPAINT_INSTANTIATE_CONV(T)                                                        \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*,    \
                                  Buffer<T>&);                                         \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*, const T*, T*,   \
                                   T*, T*, Buffer<T>&);                                \
  template void conv2d_transpose_forward<T>(const ConvGeometry&, const T*, const T*,        \
                                            const T*, T*, Buffer<T>&);                 \
  template void conv2d_transpose_backward<T>(const ConvGeometry&, const T*, const T*,       \
                                             const T*, T*, T*, T*, Buffer<T>&);        \
  template void dense_forward<T>(int, int, const T*, const T*, const T*, T*);               \
  template void dense_backward<T>(int, int, const T*, const T*, const T*, T*, T*, T*);

OUTPAINT_INSTANTIATE_CONV(float)
OUTPAINT_INSTANTIATE_CONV(double)

#undef OUTPAINT_INSTANTIATE_CONV

}  // namespace outpaint
