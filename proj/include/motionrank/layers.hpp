#pragma once

#include <utility>

#include "motionrank/tensor.hpp"

namespace motionrank {

enum class Activation { Relu, LeakyRelu, Tanh, Linear };

// Elementwise; leaky slope only applies to LeakyRelu and must be in (0,1).
Tensor activation_forward(const Tensor& x, Activation kind, double slope = 0.2);
// Upstream times the activation derivative evaluated at the pre-activation x.
Tensor activation_backward(const Tensor& x, Activation kind, const Tensor& upstream,
                           double slope = 0.2);

// y = W x + b with x {N}, W {M,N}, b {M}.
Tensor dense_forward(const Tensor& x, const Tensor& W, const Tensor& b);
LayerGrad dense_backward(const Tensor& x, const Tensor& W, const Tensor& upstream);

// {C,H,W} -> {C} channel means.
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const std::vector<int>& input_shape, const Tensor& upstream);

// Max-subtracted softmax; output is a probability vector.
Tensor softmax(const Tensor& logits);

// loss = -log softmax(logits)[label]; grad = softmax(logits) - onehot(label).
std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits, int label);

} // namespace motionrank
