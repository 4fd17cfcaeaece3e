#include "motionrank/kernels.hpp"

#include <stdexcept>
#include <string>

#include "motionrank/errors.hpp"

namespace motionrank {

namespace {

struct ConvDims {
    int C, H, W;     // input
    int F, K;        // kernels {F,C,K,K}
    int Ho, Wo;      // output
};

ConvDims check_conv_args(const Tensor& input, const Tensor& kernels, const Tensor* bias,
                         int stride, int pad) {
    if (input.rank() != 3) {
        throw ShapeError("conv2d: input must be {C,H,W}, got " + shape_str(input.shape));
    }
    if (kernels.rank() != 4 || kernels.shape[2] != kernels.shape[3]) {
        throw ShapeError("conv2d: kernels must be {F,C,K,K}, got " + shape_str(kernels.shape));
    }
    if (kernels.shape[1] != input.shape[0]) {
        throw ShapeError("conv2d: input has " + std::to_string(input.shape[0]) +
                         " channels but kernels expect " + std::to_string(kernels.shape[1]));
    }
    if (bias && (bias->rank() != 1 || bias->shape[0] != kernels.shape[0])) {
        throw ShapeError("conv2d: bias must be {F}, got " + shape_str(bias->shape));
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d: stride must be >= 1");
    }
    if (pad < 0) {
        throw std::invalid_argument("conv2d: pad must be >= 0");
    }
    ConvDims d;
    d.C = input.shape[0];
    d.H = input.shape[1];
    d.W = input.shape[2];
    d.F = kernels.shape[0];
    d.K = kernels.shape[2];
    if (d.K > d.H + 2 * pad || d.K > d.W + 2 * pad) {
        throw ShapeError("conv2d: kernel " + std::to_string(d.K) + " exceeds padded input " +
                         shape_str(input.shape) + " with pad " + std::to_string(pad));
    }
    d.Ho = conv_out_extent(d.H, d.K, stride, pad);
    d.Wo = conv_out_extent(d.W, d.K, stride, pad);
    return d;
}

struct ConvTDims {
    int F, H, W;     // input {F,H,W}
    int C, K;        // kernels {F,C,K,K}
    int Ho, Wo;      // output {C,Ho,Wo}
};

ConvTDims check_convt_args(const Tensor& input, const Tensor& kernels, const Tensor* bias,
                           int stride, int pad, int out_adjust) {
    if (input.rank() != 3) {
        throw ShapeError("conv2d_transpose: input must be {F,H,W}, got " + shape_str(input.shape));
    }
    if (kernels.rank() != 4 || kernels.shape[2] != kernels.shape[3]) {
        throw ShapeError("conv2d_transpose: kernels must be {F,C,K,K}, got " + shape_str(kernels.shape));
    }
    if (kernels.shape[0] != input.shape[0]) {
        throw ShapeError("conv2d_transpose: input has " + std::to_string(input.shape[0]) +
                         " channels but kernels expect " + std::to_string(kernels.shape[0]));
    }
    if (bias && (bias->rank() != 1 || bias->shape[0] != kernels.shape[1])) {
        throw ShapeError("conv2d_transpose: bias must be {C}, got " + shape_str(bias->shape));
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d_transpose: stride must be >= 1");
    }
    if (pad < 0) {
        throw std::invalid_argument("conv2d_transpose: pad must be >= 0");
    }
    if (out_adjust < 0 || out_adjust >= stride) {
        throw std::invalid_argument("conv2d_transpose: out_adjust must satisfy 0 <= out_adjust < stride, got " +
                                    std::to_string(out_adjust));
    }
    ConvTDims d;
    d.F = input.shape[0];
    d.H = input.shape[1];
    d.W = input.shape[2];
    d.C = kernels.shape[1];
    d.K = kernels.shape[2];
    d.Ho = conv_transpose_out_extent(d.H, d.K, stride, pad, out_adjust);
    d.Wo = conv_transpose_out_extent(d.W, d.K, stride, pad, out_adjust);
    if (d.Ho < 1 || d.Wo < 1) {
        throw ShapeError("conv2d_transpose: non-positive output extent for input " + shape_str(input.shape));
    }
    return d;
}

// Threading pays off only for non-trivial outputs; tiny gradcheck shapes run inline.
constexpr std::size_t kParallelCutoff = 2048;

} // namespace

int conv_out_extent(int n, int k, int stride, int pad) {
    return (n + 2 * pad - k) / stride + 1;
}

int conv_transpose_out_extent(int n, int k, int stride, int pad, int out_adjust) {
    return stride * (n - 1) + k - 2 * pad + out_adjust;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      int stride, int pad) {
    const ConvDims d = check_conv_args(input, kernels, &bias, stride, pad);
    Tensor out({d.F, d.Ho, d.Wo});
    const double* in = input.data.data();
    const double* ker = kernels.data.data();
    double* dst = out.data.data();
    const std::size_t work = out.numel() * static_cast<std::size_t>(d.C * d.K * d.K);
#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
    for (int f = 0; f < d.F; ++f) {
        for (int ho = 0; ho < d.Ho; ++ho) {
            const int h0 = ho * stride - pad;
            const int kh_lo = h0 < 0 ? -h0 : 0;
            const int kh_hi = std::min(d.K, d.H - h0);
            double* out_row = dst + (static_cast<std::size_t>(f) * d.Ho + ho) * d.Wo;
            for (int wo = 0; wo < d.Wo; ++wo) {
                const int w0 = wo * stride - pad;
                const int kw_lo = w0 < 0 ? -w0 : 0;
                const int kw_hi = std::min(d.K, d.W - w0);
                double acc = bias[static_cast<std::size_t>(f)];
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = kh_lo; kh < kh_hi; ++kh) {
                        const double* in_row =
                            in + (static_cast<std::size_t>(c) * d.H + (h0 + kh)) * d.W + w0;
                        const double* k_row =
                            ker + ((static_cast<std::size_t>(f) * d.C + c) * d.K + kh) * d.K;
                        for (int kw = kw_lo; kw < kw_hi; ++kw) {
                            acc += in_row[kw] * k_row[kw];
                        }
                    }
                }
                out_row[wo] = acc;
            }
        }
    }
    return out;
}

LayerGrad conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int pad, const Tensor& upstream) {
    const ConvDims d = check_conv_args(input, kernels, nullptr, stride, pad);
    require_shape(upstream, {d.F, d.Ho, d.Wo}, "conv2d_backward: upstream");

    LayerGrad g;
    g.input_grad = Tensor({d.C, d.H, d.W});
    Tensor kgrad({d.F, d.C, d.K, d.K});
    Tensor bgrad({d.F});

    // d/dinput, gather over the input cells each output touched. Only taps
    // with (h + pad - kh) divisible by the stride contribute; start at the
    // aligned offset and step by stride.
    const double* ker = kernels.data.data();
    const double* up = upstream.data.data();
    const std::size_t work_in = g.input_grad.numel() * static_cast<std::size_t>(d.F * d.K * d.K);
#pragma omp parallel for collapse(2) schedule(static) if (work_in > kParallelCutoff)
    for (int c = 0; c < d.C; ++c) {
        for (int h = 0; h < d.H; ++h) {
            const int th = h + pad;
            double* grad_row = g.input_grad.data.data() + (static_cast<std::size_t>(c) * d.H + h) * d.W;
            for (int w = 0; w < d.W; ++w) {
                const int tw = w + pad;
                double acc = 0.0;
                for (int f = 0; f < d.F; ++f) {
                    const std::size_t k_base = (static_cast<std::size_t>(f) * d.C + c) * d.K * d.K;
                    const std::size_t u_base = static_cast<std::size_t>(f) * d.Ho * d.Wo;
                    for (int kh = th % stride; kh < d.K; kh += stride) {
                        const int ho = (th - kh) / stride;
                        if (ho < 0 || ho >= d.Ho) continue;
                        const double* k_row = ker + k_base + static_cast<std::size_t>(kh) * d.K;
                        const double* up_row = up + u_base + static_cast<std::size_t>(ho) * d.Wo;
                        for (int kw = tw % stride; kw < d.K; kw += stride) {
                            const int wo = (tw - kw) / stride;
                            if (wo < 0 || wo >= d.Wo) continue;
                            acc += k_row[kw] * up_row[wo];
                        }
                    }
                }
                grad_row[w] = acc;
            }
        }
    }

    // d/dkernels, one cell per (f,c,kh,kw).
    const double* in = input.data.data();
    const std::size_t work_k = kgrad.numel() * static_cast<std::size_t>(d.Ho * d.Wo);
#pragma omp parallel for collapse(2) schedule(static) if (work_k > kParallelCutoff)
    for (int f = 0; f < d.F; ++f) {
        for (int c = 0; c < d.C; ++c) {
            for (int kh = 0; kh < d.K; ++kh) {
                // valid ho: 0 <= ho*stride - pad + kh < H
                const int ho_lo = std::max(0, (pad - kh + stride - 1) / stride);
                const int ho_hi = std::min(d.Ho, (d.H - 1 + pad - kh) / stride + 1);
                for (int kw = 0; kw < d.K; ++kw) {
                    const int wo_lo = std::max(0, (pad - kw + stride - 1) / stride);
                    const int wo_hi = std::min(d.Wo, (d.W - 1 + pad - kw) / stride + 1);
                    double acc = 0.0;
                    for (int ho = ho_lo; ho < ho_hi; ++ho) {
                        const int h = ho * stride - pad + kh;
                        const double* up_row = up + (static_cast<std::size_t>(f) * d.Ho + ho) * d.Wo;
                        const double* in_row = in + (static_cast<std::size_t>(c) * d.H + h) * d.W;
                        for (int wo = wo_lo; wo < wo_hi; ++wo) {
                            acc += up_row[wo] * in_row[wo * stride - pad + kw];
                        }
                    }
                    kgrad.at(f, c, kh, kw) = acc;
                }
            }
        }
    }

    for (int f = 0; f < d.F; ++f) {
        double acc = 0.0;
        for (int ho = 0; ho < d.Ho; ++ho) {
            for (int wo = 0; wo < d.Wo; ++wo) {
                acc += upstream.at(f, ho, wo);
            }
        }
        bgrad[static_cast<std::size_t>(f)] = acc;
    }

    g.param_grads.emplace("kernels", std::move(kgrad));
    g.param_grads.emplace("bias", std::move(bgrad));
    return g;
}

Tensor conv2d_transpose_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                                int stride, int pad, int out_adjust) {
    const ConvTDims d = check_convt_args(input, kernels, &bias, stride, pad, out_adjust);
    Tensor out({d.C, d.Ho, d.Wo});
    const double* in = input.data.data();
    const double* ker = kernels.data.data();
    const std::size_t work = out.numel() * static_cast<std::size_t>(d.F * d.K * d.K);
#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
    for (int c = 0; c < d.C; ++c) {
        for (int oh = 0; oh < d.Ho; ++oh) {
            const int th = oh + pad;
            double* out_row = out.data.data() + (static_cast<std::size_t>(c) * d.Ho + oh) * d.Wo;
            for (int ow = 0; ow < d.Wo; ++ow) {
                const int tw = ow + pad;
                double acc = bias[static_cast<std::size_t>(c)];
                for (int f = 0; f < d.F; ++f) {
                    const std::size_t k_base = (static_cast<std::size_t>(f) * d.C + c) * d.K * d.K;
                    const std::size_t i_base = static_cast<std::size_t>(f) * d.H * d.W;
                    for (int kh = th % stride; kh < d.K; kh += stride) {
                        const int i = (th - kh) / stride;
                        if (i < 0 || i >= d.H) continue;
                        const double* k_row = ker + k_base + static_cast<std::size_t>(kh) * d.K;
                        const double* in_row = in + i_base + static_cast<std::size_t>(i) * d.W;
                        for (int kw = tw % stride; kw < d.K; kw += stride) {
                            const int j = (tw - kw) / stride;
                            if (j < 0 || j >= d.W) continue;
                            acc += in_row[j] * k_row[kw];
                        }
                    }
                }
                out_row[ow] = acc;
            }
        }
    }
    return out;
}

LayerGrad conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int pad, int out_adjust, const Tensor& upstream) {
    const ConvTDims d = check_convt_args(input, kernels, nullptr, stride, pad, out_adjust);
    require_shape(upstream, {d.C, d.Ho, d.Wo}, "conv2d_transpose_backward: upstream");

    LayerGrad g;
    g.input_grad = Tensor({d.F, d.H, d.W});
    Tensor kgrad({d.F, d.C, d.K, d.K});
    Tensor bgrad({d.C});

    // d/dinput is a plain convolution of the upstream with the same kernels.
    const double* up = upstream.data.data();
    const double* ker = kernels.data.data();
    const double* in = input.data.data();
    const std::size_t work_in = g.input_grad.numel() * static_cast<std::size_t>(d.C * d.K * d.K);
#pragma omp parallel for collapse(2) schedule(static) if (work_in > kParallelCutoff)
    for (int f = 0; f < d.F; ++f) {
        for (int i = 0; i < d.H; ++i) {
            const int oh0 = i * stride - pad;
            const int kh_lo = oh0 < 0 ? -oh0 : 0;
            const int kh_hi = std::min(d.K, d.Ho - oh0);
            double* grad_row = g.input_grad.data.data() + (static_cast<std::size_t>(f) * d.H + i) * d.W;
            for (int j = 0; j < d.W; ++j) {
                const int ow0 = j * stride - pad;
                const int kw_lo = ow0 < 0 ? -ow0 : 0;
                const int kw_hi = std::min(d.K, d.Wo - ow0);
                double acc = 0.0;
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = kh_lo; kh < kh_hi; ++kh) {
                        const double* up_row =
                            up + (static_cast<std::size_t>(c) * d.Ho + (oh0 + kh)) * d.Wo + ow0;
                        const double* k_row =
                            ker + ((static_cast<std::size_t>(f) * d.C + c) * d.K + kh) * d.K;
                        for (int kw = kw_lo; kw < kw_hi; ++kw) {
                            acc += up_row[kw] * k_row[kw];
                        }
                    }
                }
                grad_row[j] = acc;
            }
        }
    }

    const std::size_t work_k = kgrad.numel() * static_cast<std::size_t>(d.H * d.W);
#pragma omp parallel for collapse(2) schedule(static) if (work_k > kParallelCutoff)
    for (int f = 0; f < d.F; ++f) {
        for (int c = 0; c < d.C; ++c) {
            for (int kh = 0; kh < d.K; ++kh) {
                // valid i: 0 <= i*stride - pad + kh < Ho
                const int i_lo = std::max(0, (pad - kh + stride - 1) / stride);
                const int i_hi = std::min(d.H, (d.Ho - 1 + pad - kh) / stride + 1);
                for (int kw = 0; kw < d.K; ++kw) {
                    const int j_lo = std::max(0, (pad - kw + stride - 1) / stride);
                    const int j_hi = std::min(d.W, (d.Wo - 1 + pad - kw) / stride + 1);
                    double acc = 0.0;
                    for (int i = i_lo; i < i_hi; ++i) {
                        const int oh = i * stride - pad + kh;
                        const double* in_row = in + (static_cast<std::size_t>(f) * d.H + i) * d.W;
                        const double* up_row = up + (static_cast<std::size_t>(c) * d.Ho + oh) * d.Wo;
                        for (int j = j_lo; j < j_hi; ++j) {
                            acc += in_row[j] * up_row[j * stride - pad + kw];
                        }
                    }
                    kgrad.at(f, c, kh, kw) = acc;
                }
            }
        }
    }

    for (int c = 0; c < d.C; ++c) {
        double acc = 0.0;
        for (int oh = 0; oh < d.Ho; ++oh) {
            for (int ow = 0; ow < d.Wo; ++ow) {
                acc += upstream.at(c, oh, ow);
            }
        }
        bgrad[static_cast<std::size_t>(c)] = acc;
    }

    g.param_grads.emplace("kernels", std::move(kgrad));
    g.param_grads.emplace("bias", std::move(bgrad));
    return g;
}

namespace serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      int stride, int pad) {
    const ConvDims d = check_conv_args(input, kernels, &bias, stride, pad);
    Tensor out({d.F, d.Ho, d.Wo});
    for (int f = 0; f < d.F; ++f) {
        for (int ho = 0; ho < d.Ho; ++ho) {
            for (int wo = 0; wo < d.Wo; ++wo) {
                double acc = bias[static_cast<std::size_t>(f)];
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = 0; kh < d.K; ++kh) {
                        const int h = ho * stride - pad + kh;
                        if (h < 0 || h >= d.H) continue;
                        for (int kw = 0; kw < d.K; ++kw) {
                            const int w = wo * stride - pad + kw;
                            if (w < 0 || w >= d.W) continue;
                            acc += input.at(c, h, w) * kernels.at(f, c, kh, kw);
                        }
                    }
                }
                out.at(f, ho, wo) = acc;
            }
        }
    }
    return out;
}

LayerGrad conv2d_backward(const Tensor& input, const Tensor& kernels,
                          int stride, int pad, const Tensor& upstream) {
    const ConvDims d = check_conv_args(input, kernels, nullptr, stride, pad);
    require_shape(upstream, {d.F, d.Ho, d.Wo}, "conv2d_backward: upstream");

    LayerGrad g;
    g.input_grad = Tensor({d.C, d.H, d.W});
    Tensor kgrad({d.F, d.C, d.K, d.K});
    Tensor bgrad({d.F});

    // Scatter from each output cell, mirroring the forward loop.
    for (int f = 0; f < d.F; ++f) {
        for (int ho = 0; ho < d.Ho; ++ho) {
            for (int wo = 0; wo < d.Wo; ++wo) {
                const double up = upstream.at(f, ho, wo);
                bgrad[static_cast<std::size_t>(f)] += up;
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = 0; kh < d.K; ++kh) {
                        const int h = ho * stride - pad + kh;
                        if (h < 0 || h >= d.H) continue;
                        for (int kw = 0; kw < d.K; ++kw) {
                            const int w = wo * stride - pad + kw;
                            if (w < 0 || w >= d.W) continue;
                            g.input_grad.at(c, h, w) += kernels.at(f, c, kh, kw) * up;
                            kgrad.at(f, c, kh, kw) += input.at(c, h, w) * up;
                        }
                    }
                }
            }
        }
    }

    g.param_grads.emplace("kernels", std::move(kgrad));
    g.param_grads.emplace("bias", std::move(bgrad));
    return g;
}

Tensor conv2d_transpose_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                                int stride, int pad, int out_adjust) {
    const ConvTDims d = check_convt_args(input, kernels, &bias, stride, pad, out_adjust);
    Tensor out({d.C, d.Ho, d.Wo});
    for (int c = 0; c < d.C; ++c) {
        for (int oh = 0; oh < d.Ho; ++oh) {
            for (int ow = 0; ow < d.Wo; ++ow) {
                out.at(c, oh, ow) = bias[static_cast<std::size_t>(c)];
            }
        }
    }
    // Scatter each input cell through the kernel.
    for (int f = 0; f < d.F; ++f) {
        for (int i = 0; i < d.H; ++i) {
            for (int j = 0; j < d.W; ++j) {
                const double v = input.at(f, i, j);
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = 0; kh < d.K; ++kh) {
                        const int oh = i * stride - pad + kh;
                        if (oh < 0 || oh >= d.Ho) continue;
                        for (int kw = 0; kw < d.K; ++kw) {
                            const int ow = j * stride - pad + kw;
                            if (ow < 0 || ow >= d.Wo) continue;
                            out.at(c, oh, ow) += v * kernels.at(f, c, kh, kw);
                        }
                    }
                }
            }
        }
    }
    return out;
}

LayerGrad conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                                    int stride, int pad, int out_adjust, const Tensor& upstream) {
    const ConvTDims d = check_convt_args(input, kernels, nullptr, stride, pad, out_adjust);
    require_shape(upstream, {d.C, d.Ho, d.Wo}, "conv2d_transpose_backward: upstream");

    LayerGrad g;
    g.input_grad = Tensor({d.F, d.H, d.W});
    Tensor kgrad({d.F, d.C, d.K, d.K});
    Tensor bgrad({d.C});

    for (int c = 0; c < d.C; ++c) {
        for (int oh = 0; oh < d.Ho; ++oh) {
            for (int ow = 0; ow < d.Wo; ++ow) {
                bgrad[static_cast<std::size_t>(c)] += upstream.at(c, oh, ow);
            }
        }
    }
    for (int f = 0; f < d.F; ++f) {
        for (int i = 0; i < d.H; ++i) {
            for (int j = 0; j < d.W; ++j) {
                double acc = 0.0;
                for (int c = 0; c < d.C; ++c) {
                    for (int kh = 0; kh < d.K; ++kh) {
                        const int oh = i * stride - pad + kh;
                        if (oh < 0 || oh >= d.Ho) continue;
                        for (int kw = 0; kw < d.K; ++kw) {
                            const int ow = j * stride - pad + kw;
                            if (ow < 0 || ow >= d.Wo) continue;
                            const double up = upstream.at(c, oh, ow);
                            acc += up * kernels.at(f, c, kh, kw);
                            kgrad.at(f, c, kh, kw) += input.at(f, i, j) * up;
                        }
                    }
                }
                g.input_grad.at(f, i, j) = acc;
            }
        }
    }

    g.param_grads.emplace("kernels", std::move(kgrad));
    g.param_grads.emplace("bias", std::move(bgrad));
    return g;
}

} // namespace serial

} // namespace motionrank
