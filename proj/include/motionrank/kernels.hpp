#pragma once

#include "motionrank/tensor.hpp"

namespace motionrank {

// Output spatial extent of a strided convolution: floor((n + 2*pad - k)/stride) + 1.
int conv_out_extent(int n, int k, int stride, int pad);
// Output spatial extent of a transposed convolution: stride*(n-1) + k - 2*pad + adjust.
int conv_transpose_out_extent(int n, int k, int stride, int pad, int out_adjust);

// input {C,H,W}, kernels {F,C,K,K}, bias {F} -> {F,H',W'}. Zero padding.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      int stride, int pad);

// Gradients w.r.t. input, kernels ("kernels") and bias ("bias").
LayerGrad conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int pad, const Tensor& upstream);

// input {F,H,W}, kernels {F,C,K,K}, bias {C} -> {C,H',W'}. Exact linear
// transpose of conv2d_forward with the same kernels when out_adjust mirrors
// the shapes. Requires 0 <= out_adjust < stride.
Tensor conv2d_transpose_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                                int stride, int pad, int out_adjust);

LayerGrad conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int pad, int out_adjust, const Tensor& upstream);

// Straightforward single-threaded reference implementations. The parallel
// kernels above are checked against these; the benchmark tool compares
// their throughput. The transpose/backward references use scatter loops, so
// floating-point accumulation order differs from the gather kernels and
// agreement is up-to-roundoff rather than bitwise.
namespace serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      int stride, int pad);
LayerGrad conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int pad, const Tensor& upstream);
Tensor conv2d_transpose_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                                int stride, int pad, int out_adjust);
LayerGrad conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int pad, int out_adjust, const Tensor& upstream);

} // namespace serial

} // namespace motionrank
