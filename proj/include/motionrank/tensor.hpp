#pragma once

#include <map>
#include <string>
#include <vector>

namespace motionrank {

// Dense row-major double tensor. Shape {C,H,W} for images, {F,C,K,K} for
// conv kernels, {M,N} for dense weights, {N} for vectors.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    Tensor(std::vector<int> s, double fill);
    Tensor(std::vector<int> s, std::vector<double> d);

    std::size_t numel() const { return data.size(); }
    int dim(std::size_t i) const { return shape[i]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // 3-D {C,H,W} accessors.
    double& at(int c, int h, int w);
    double at(int c, int h, int w) const;
    // 4-D {F,C,Kh,Kw} accessors.
    double& at(int f, int c, int kh, int kw);
    double at(int f, int c, int kh, int kw) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double c);
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double c);
Tensor operator*(double c, Tensor a);

double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& t);
double mean(const Tensor& t);
double max_abs(const Tensor& t);

void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
void require_finite(const Tensor& t, const char* what);

// Named parameter / gradient collections. std::map keeps iteration order
// deterministic.
using TensorMap = std::map<std::string, Tensor>;

// Gradients of one layer: w.r.t. its input plus each named parameter.
struct LayerGrad {
    Tensor input_grad;
    TensorMap param_grads;
};

} // namespace motionrank
