#include "planet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "planet/errors.hpp"

namespace planet {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
        throw DimensionError("tensor shape " + shape_str(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
    const auto n = values.size();
    return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.size() < 2) return 1;
    return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 1;
    return shape_.back();
}

double Tensor::item() const {
    if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape_));
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

namespace {

void require_matrixish(const Tensor& t, const char* what) {
    if (t.rank() > 2) throw DimensionError(std::string(what) + ": rank > 2 operand " + shape_str(t.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrixish(a, "matmul");
    require_matrixish(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols();
    const std::size_t kb = b.rank() == 1 ? b.size() : b.rows();
    const std::size_t n = b.rank() == 1 ? 1 : b.cols();
    if (k != kb)
        throw DimensionError("matmul: inner extents differ " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
    Tensor out(Shape{m, n}, 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrixish(a, "matmul_nt");
    require_matrixish(b, "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k)
        throw DimensionError("matmul_nt: inner extents differ " + shape_str(a.shape()) + " * " +
                             shape_str(b.shape()) + "^T");
    Tensor out(Shape{m, n}, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto ar = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto br = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
            out.at(i, j) = s;
        }
    }
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrixish(a, "matmul_tn");
    require_matrixish(b, "matmul_tn");
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    if (b.rows() != k)
        throw DimensionError("matmul_tn: inner extents differ " + shape_str(a.shape()) + "^T * " +
                             shape_str(b.shape()));
    Tensor out(Shape{m, n}, 0.0);
    double* po = out.data().data();
    for (std::size_t p = 0; p < k; ++p) {
        const auto ar = a.row(p);
        const auto br = b.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ar[i];
            if (av == 0.0) continue;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require_matrixish(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out(Shape{n, m}, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

namespace {

void softmax_inplace(double* x, std::size_t n, std::size_t stride) {
    double mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i * stride] = std::exp(x[i * stride] - mx);
        z += x[i * stride];
    }
    for (std::size_t i = 0; i < n; ++i) x[i * stride] /= z;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
    require_matrixish(x, "softmax");
    if (x.size() == 0) throw DimensionError("softmax over an empty axis");
    Tensor out = x;
    if (x.rank() <= 1) {
        if (axis > 0) throw DimensionError("softmax: axis out of range for a vector");
        softmax_inplace(out.data().data(), out.size(), 1);
        return out;
    }
    const std::size_t m = x.rows(), n = x.cols();
    if (axis == 1 || axis == -1) {
        for (std::size_t i = 0; i < m; ++i) softmax_inplace(out.data().data() + i * n, n, 1);
    } else if (axis == 0) {
        for (std::size_t j = 0; j < n; ++j) softmax_inplace(out.data().data() + j, m, n);
    } else {
        throw DimensionError("softmax: axis out of range");
    }
    return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_matrixish(x, "layernorm");
    const std::size_t m = x.rows(), d = x.cols();
    if (d == 0) throw DimensionError("layernorm over an empty row");
    if (gamma.size() != d || beta.size() != d)
        throw DimensionError("layernorm: gamma/beta must have " + std::to_string(d) + " entries");
    if (!(eps > 0.0)) throw DomainError("layernorm: eps must be positive");
    Tensor out = x;
    for (std::size_t i = 0; i < m; ++i) {
        auto r = out.row(i);
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (double v : r) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - mean) * inv * gamma[j] + beta[j];
    }
    return out;
}

Tensor l2_normalize(const Tensor& x) {
    require_matrixish(x, "l2_normalize");
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = out.row(i);
        double ss = 0.0;
        for (double v : r) ss += v * v;
        if (!(ss > 0.0)) throw DegenerateInputError("l2_normalize: zero-norm vector");
        const double inv = 1.0 / std::sqrt(ss);
        for (double& v : r) v *= inv;
    }
    return out;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_sim: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (!(aa > 0.0) || !(bb > 0.0)) throw DegenerateInputError("cosine_sim: zero-norm input");
    const double c = ab / (std::sqrt(aa) * std::sqrt(bb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine_sim(const Tensor& a, const Tensor& b) { return cosine_sim(a.data(), b.data()); }

double finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& theta,
                         const Tensor& analytic, double h) {
    if (analytic.size() != theta.size()) throw DimensionError("finite_diff_check: gradient/parameter size mismatch");
    if (!(h > 0.0)) throw DomainError("finite_diff_check: step must be positive");
    Tensor probe = theta;
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = f(probe);
        probe[i] = orig - h;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_check: non-finite evaluation at coordinate " + std::to_string(i));
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace planet
