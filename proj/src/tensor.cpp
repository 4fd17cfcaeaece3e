#include "motionrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "motionrank/errors.hpp"

namespace motionrank {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) {
            throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(shape));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
}

double& Tensor::at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
}

double Tensor::at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
}

double& Tensor::at(int f, int c, int kh, int kw) {
    return data[((static_cast<std::size_t>(f) * shape[1] + c) * shape[2] + kh) * shape[3] + kw];
}

double Tensor::at(int f, int c, int kh, int kw) const {
    return data[((static_cast<std::size_t>(f) * shape[1] + c) * shape[2] + kh) * shape[3] + kw];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= other.data[i];
    return *this;
}

Tensor& Tensor::operator*=(double c) {
    for (double& v : data) v *= c;
    return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
Tensor operator*(Tensor a, double c) { a *= c; return a; }
Tensor operator*(double c, Tensor a) { a *= c; return a; }

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double sum(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v;
    return s;
}

double mean(const Tensor& t) {
    return t.data.empty() ? 0.0 : sum(t) / static_cast<double>(t.data.size());
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.data) m = std::max(m, std::fabs(v));
    return m;
}

void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
    if (t.shape != shape) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_str(shape) +
                         ", got " + shape_str(t.shape));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
    }
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        throw NumericError(std::string(what) + ": tensor contains non-finite values");
    }
}

} // namespace motionrank
