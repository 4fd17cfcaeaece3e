#include "motionrank/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "motionrank/errors.hpp"

namespace motionrank {

namespace {

void check_slope(Activation kind, double slope) {
    if (kind == Activation::LeakyRelu && !(slope > 0.0 && slope < 1.0)) {
        throw std::invalid_argument("leaky_relu slope must be in (0,1), got " + std::to_string(slope));
    }
}

} // namespace

Tensor activation_forward(const Tensor& x, Activation kind, double slope) {
    check_slope(kind, slope);
    Tensor y = x;
    switch (kind) {
        case Activation::Relu:
            for (double& v : y.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::LeakyRelu:
            for (double& v : y.data) v = v > 0.0 ? v : slope * v;
            break;
        case Activation::Tanh:
            for (double& v : y.data) v = std::tanh(v);
            break;
        case Activation::Linear:
            break;
    }
    return y;
}

Tensor activation_backward(const Tensor& x, Activation kind, const Tensor& upstream, double slope) {
    check_slope(kind, slope);
    require_same_shape(x, upstream, "activation_backward");
    Tensor g = upstream;
    switch (kind) {
        case Activation::Relu:
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                if (x.data[i] <= 0.0) g.data[i] = 0.0;
            }
            break;
        case Activation::LeakyRelu:
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                if (x.data[i] <= 0.0) g.data[i] *= slope;
            }
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                const double t = std::tanh(x.data[i]);
                g.data[i] *= 1.0 - t * t;
            }
            break;
        case Activation::Linear:
            break;
    }
    return g;
}

Tensor dense_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
    if (W.rank() != 2) {
        throw ShapeError("dense: W must be {M,N}, got " + shape_str(W.shape));
    }
    const int M = W.shape[0];
    const int N = W.shape[1];
    if (static_cast<int>(x.numel()) != N) {
        throw ShapeError("dense: x has " + std::to_string(x.numel()) + " elements, W expects " +
                         std::to_string(N));
    }
    require_shape(b, {M}, "dense: bias");
    Tensor y({M});
    for (int m = 0; m < M; ++m) {
        double acc = b.data[static_cast<std::size_t>(m)];
        const std::size_t row = static_cast<std::size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            acc += W.data[row + n] * x.data[static_cast<std::size_t>(n)];
        }
        y.data[static_cast<std::size_t>(m)] = acc;
    }
    return y;
}

LayerGrad dense_backward(const Tensor& x, const Tensor& W, const Tensor& upstream) {
    const int M = W.shape[0];
    const int N = W.shape[1];
    if (static_cast<int>(x.numel()) != N) {
        throw ShapeError("dense_backward: x has " + std::to_string(x.numel()) +
                         " elements, W expects " + std::to_string(N));
    }
    require_shape(upstream, {M}, "dense_backward: upstream");

    LayerGrad g;
    g.input_grad = Tensor(x.shape);
    Tensor wgrad({M, N});
    Tensor bgrad = upstream;
    for (int m = 0; m < M; ++m) {
        const double up = upstream.data[static_cast<std::size_t>(m)];
        const std::size_t row = static_cast<std::size_t>(m) * N;
        for (int n = 0; n < N; ++n) {
            g.input_grad.data[static_cast<std::size_t>(n)] += W.data[row + n] * up;
            wgrad.data[row + n] = x.data[static_cast<std::size_t>(n)] * up;
        }
    }
    g.param_grads.emplace("W", std::move(wgrad));
    g.param_grads.emplace("b", std::move(bgrad));
    return g;
}

Tensor global_avg_pool_forward(const Tensor& x) {
    if (x.rank() != 3) {
        throw ShapeError("global_avg_pool: input must be {C,H,W}, got " + shape_str(x.shape));
    }
    const int C = x.shape[0];
    const double inv = 1.0 / (static_cast<double>(x.shape[1]) * x.shape[2]);
    Tensor y({C});
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int h = 0; h < x.shape[1]; ++h) {
            for (int w = 0; w < x.shape[2]; ++w) {
                acc += x.at(c, h, w);
            }
        }
        y.data[static_cast<std::size_t>(c)] = acc * inv;
    }
    return y;
}

Tensor global_avg_pool_backward(const std::vector<int>& input_shape, const Tensor& upstream) {
    if (input_shape.size() != 3) {
        throw ShapeError("global_avg_pool_backward: input shape must be {C,H,W}");
    }
    require_shape(upstream, {input_shape[0]}, "global_avg_pool_backward: upstream");
    Tensor g(input_shape);
    const double inv = 1.0 / (static_cast<double>(input_shape[1]) * input_shape[2]);
    for (int c = 0; c < input_shape[0]; ++c) {
        const double v = upstream.data[static_cast<std::size_t>(c)] * inv;
        for (int h = 0; h < input_shape[1]; ++h) {
            for (int w = 0; w < input_shape[2]; ++w) {
                g.at(c, h, w) = v;
            }
        }
    }
    return g;
}

Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    double mx = logits.data[0];
    for (double v : logits.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : p.data) v /= z;
    return p;
}

std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits, int label) {
    const int C = static_cast<int>(logits.numel());
    if (label < 0 || label >= C) {
        throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                    " out of range [0," + std::to_string(C) + ")");
    }
    double mx = logits.data[0];
    for (double v : logits.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits.data) z += std::exp(v - mx);
    const double logz = std::log(z) + mx;
    const double loss = logz - logits.data[static_cast<std::size_t>(label)];

    Tensor grad = softmax(logits);
    grad.data[static_cast<std::size_t>(label)] -= 1.0;
    return {loss, grad};
}

} // namespace motionrank
