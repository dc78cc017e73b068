#include "tempcast/tensor.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tempcast {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

using MatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutableMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 2)
        throw std::invalid_argument("Tensor: rank must be 1 or 2, got " + shape_string(shape_));
    if (shape_product(shape_) != data_.size())
        throw std::invalid_argument("Tensor: shape " + shape_string(shape_) + " does not match " +
                                    std::to_string(data_.size()) + " elements");
    if (!all_finite())
        throw std::invalid_argument("Tensor: non-finite entry in shape " + shape_string(shape_));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t = uninitialized(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = uninitialized(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n, 1}, std::move(values));
}

Tensor Tensor::uninitialized(std::vector<std::size_t> shape) {
    if (shape.empty() || shape.size() > 2)
        throw std::invalid_argument("Tensor: rank must be 1 or 2, got " + shape_string(shape));
    Tensor t;
    t.data_.resize(shape_product(shape));
    t.shape_ = std::move(shape);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

namespace ops {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
}

bool row_broadcastable(const Tensor& a, const Tensor& b) {
    return a.is_matrix() && b.is_matrix() && b.shape()[0] == 1 && a.shape()[1] == b.shape()[1];
}

template <typename F>
Tensor zip(const char* name, const Tensor& a, const Tensor& b, F&& f) {
    Tensor out = Tensor::uninitialized(a.shape());
    if (a.same_shape(b)) {
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    if (row_broadcastable(a, b)) {
        const std::size_t cols = a.shape()[1];
        for (std::size_t r = 0; r < a.shape()[0]; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out[r * cols + c] = f(a[r * cols + c], b[c]);
        return out;
    }
    shape_error(name, a, b);
}

template <typename F>
Tensor map(const Tensor& a, F&& f) {
    Tensor out = Tensor::uninitialized(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip("add", a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip("sub", a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_error("mul", a, b);
    Tensor out = Tensor::uninitialized(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (!a.is_matrix() || !b.is_matrix() || a.shape()[1] != b.shape()[0])
        shape_error("matmul", a, b);
    const auto n = static_cast<Eigen::Index>(a.shape()[0]);
    const auto k = static_cast<Eigen::Index>(a.shape()[1]);
    const auto m = static_cast<Eigen::Index>(b.shape()[1]);
    Tensor out = Tensor::uninitialized({a.shape()[0], b.shape()[1]});
    MutableMatrixMap(out.data().data(), n, m).noalias() =
        MatrixMap(a.data().data(), n, k) * MatrixMap(b.data().data(), k, m);
    return out;
}

Tensor tanh(const Tensor& a) {
    return map(a, [](double x) { return std::tanh(x); });
}

Tensor sigmoid(const Tensor& a) {
    return map(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor square(const Tensor& a) {
    return map(a, [](double x) { return x * x; });
}

Tensor scale(const Tensor& a, double c) {
    return map(a, [c](double x) { return c * x; });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
    double sum = 0.0;
    for (double v : a.data()) sum += v;
    Tensor out = Tensor::uninitialized({1});
    out[0] = sum / static_cast<double>(a.size());
    return out;
}

Tensor slice(const Tensor& a, std::size_t lo, std::size_t hi) {
    const std::size_t extent = a.is_matrix() ? a.shape()[1] : a.shape()[0];
    if (lo >= hi || hi > extent)
        throw std::invalid_argument("slice: range [" + std::to_string(lo) + "," + std::to_string(hi) +
                                    ") out of bounds for shape " + shape_string(a.shape()));
    if (!a.is_matrix()) {
        std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(lo),
                                a.data().begin() + static_cast<std::ptrdiff_t>(hi));
        return Tensor({hi - lo}, std::move(out));
    }
    const std::size_t rows = a.shape()[0];
    const std::size_t cols = a.shape()[1];
    Tensor out = Tensor::uninitialized({rows, hi - lo});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = lo; c < hi; ++c) out[r * (hi - lo) + (c - lo)] = a[r * cols + c];
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.is_matrix() != b.is_matrix()) shape_error("concat", a, b);
    if (!a.is_matrix()) {
        std::vector<double> out = a.data();
        out.insert(out.end(), b.data().begin(), b.data().end());
        const std::size_t n = out.size();
        return Tensor({n}, std::move(out));
    }
    if (a.shape()[0] != b.shape()[0]) shape_error("concat", a, b);
    const std::size_t rows = a.shape()[0];
    const std::size_t ac = a.shape()[1];
    const std::size_t bc = b.shape()[1];
    Tensor out = Tensor::uninitialized({rows, ac + bc});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ac; ++c) out[r * (ac + bc) + c] = a[r * ac + c];
        for (std::size_t c = 0; c < bc; ++c) out[r * (ac + bc) + ac + c] = b[r * bc + c];
    }
    return out;
}

} // namespace ops

} // namespace tempcast
