#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace planet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of 64-bit reals.
///
/// Rank 0 is a scalar (one element). Operations never mutate their inputs,
/// so a Tensor can be shared freely between threads once built.
class Tensor {
public:
    Tensor() : shape_{0} {}
    Tensor(Shape shape, std::vector<double> data);
    explicit Tensor(Shape shape, double fill = 0.0);

    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, 0.0); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    /// Rows/cols view a rank-1 tensor as a single row.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    double item() const;
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

    bool all_finite() const noexcept;
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

// Plain (non-recording) kernels. The differentiable versions in autodiff.hpp
// reuse these for their forward pass.

/// [m x k] * [k x n]. Rank-1 operands are treated as a single row.
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Softmax along `axis` (0 or 1 for matrices, 0 for vectors; -1 = last).
Tensor softmax(const Tensor& x, int axis = -1);

/// Row-wise layer normalisation; a rank-1 input is one row.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Row-wise unit L2 normalisation. Throws DegenerateInputError on a zero row.
Tensor l2_normalize(const Tensor& x);

double cosine_sim(std::span<const double> a, std::span<const double> b);
double cosine_sim(const Tensor& a, const Tensor& b);

/// Central-difference gradient check.
///
/// Returns max_i |analytic_i - (f(x + h e_i) - f(x - h e_i)) / 2h| / max(1, |analytic_i|).
/// Throws NumericError if f is non-finite anywhere it is evaluated.
double finite_diff_check(const std::function<double(const Tensor&)>& f,
                         const Tensor& theta, const Tensor& analytic, double h = 1e-5);

}  // namespace planet
