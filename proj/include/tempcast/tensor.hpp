#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tempcast {

// Dense row-major f64 array. Rank 1 ([n]) and rank 2 ([rows, cols]) are the
// shapes the toolkit uses; construction from external data rejects NaN/Inf.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);     // [1, n]
    static Tensor column(std::vector<double> values);  // [n, 1]
    // No finite check; for op outputs that are filled immediately.
    static Tensor uninitialized(std::vector<std::size_t> shape);

    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    std::size_t size() const { return data_.size(); }

    bool is_matrix() const { return shape_.size() == 2; }
    std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : shape_.empty() ? 0 : shape_[0]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Forward kernels. The tape and every no-grad evaluation path call these
// same functions, so taped and untaped forwards agree bit-for-bit.
namespace ops {

// add/sub accept equal shapes, or a [1, C] second operand broadcast across
// the rows of a [N, C] first operand (bias pattern).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, equal shapes
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor mean(const Tensor& a);  // all elements -> [1]
// Rank 1: element range [lo, hi). Rank 2: column range [lo, hi).
Tensor slice(const Tensor& a, std::size_t lo, std::size_t hi);
// Rank 1: end to end. Rank 2: side by side (same row count).
Tensor concat(const Tensor& a, const Tensor& b);

} // namespace ops

} // namespace tempcast
