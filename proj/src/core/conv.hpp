#pragma once

#include <vector>

#include "tensor.hpp"

namespace outpaint {

// Describes a 2-D convolution from `input` to `output` over HWC tensors.
// The same geometry drives the transposed convolution, which is the adjoint
// map (output -> input) of a strided convolution.
struct ConvGeometry {
  Shape input;
  Shape output;
  int filter = 1;
  int dilation = 1;
  int stride = 1;
  int pad_top = 0;
  int pad_left = 0;

  int patch_size() const { return filter * filter * input.channels; }
  int output_pixels() const { return output.height * output.width; }
};

// `same` padding: output spatial size is ceil(input / stride); any odd
// leftover padding goes to the bottom/right edge.
ConvGeometry same_conv_geometry(Shape input, int filter, int dilation, int stride,
                                int outputs);

// Geometry of the stride-2 convolution whose adjoint upsamples `small` by
// exactly 2x with the given (even) filter size.
ConvGeometry upsample_geometry(Shape small, int filter, int outputs);

// Weight layout: (filter, filter, in_channels, out_channels), row-major.
// Gradient outputs are accumulated; grad_input (if non-null) is overwritten.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight,
                    const T* bias, T* output, Buffer<T>& scratch);
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* grad_output, T* grad_input, T* grad_weight,
                     T* grad_bias, Buffer<T>& scratch);

// Transposed convolution: input has shape g.output, result has shape g.input.
// Weight layout: (filter, filter, out_channels, in_channels).
template <typename T>
void conv2d_transpose_forward(const ConvGeometry& g, const T* input, const T* weight,
                              const T* bias, T* output, Buffer<T>& scratch);
template <typename T>
void conv2d_transpose_backward(const ConvGeometry& g, const T* input, const T* weight,
                               const T* grad_output, T* grad_input, T* grad_weight,
                               T* grad_bias, Buffer<T>& scratch);

// Dense layer on a flattened input; weight layout (in, out).
template <typename T>
void dense_forward(int in, int out, const T* input, const T* weight, const T* bias,
                   T* output);
template <typename T>
void dense_backward(int in, int out, const T* input, const T* weight,
                    const T* grad_output, T* grad_input, T* grad_weight, T* grad_bias);

}  // namespace outpaint
