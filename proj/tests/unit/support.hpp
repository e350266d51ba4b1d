#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "planet/image.hpp"
#include "planet/random.hpp"
#include "planet/tensor.hpp"

// Hand-rolled generators shared by the suites.
namespace planet::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape), 0.0);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

inline Tensor random_unit_rows(Rng& rng, std::size_t rows, std::size_t cols) {
    Tensor t = random_tensor(rng, {rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        double n = 0.0;
        for (double v : t.row(r)) n += v * v;
        n = std::sqrt(n);
        for (double& v : t.row(r)) v /= n;
    }
    return t;
}

inline Image random_image(Rng& rng, std::size_t w, std::size_t h) {
    std::vector<std::uint8_t> px(w * h * 3);
    for (auto& b : px) b = static_cast<std::uint8_t>(rng.below(256));
    return Image(w, h, std::move(px));
}

inline Image solid_image(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) img.set(x, y, r, g, b);
    return img;
}

/// Luma varies along x only: columns alternate in blocks of `period` / 2.
inline Image vertical_stripes(std::size_t w, std::size_t h, std::size_t period) {
    Image img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::uint8_t v = (x % period) < period / 2 ? 255 : 0;
            img.set(x, y, v, v, v);
        }
    return img;
}

inline Image checkerboard(std::size_t w, std::size_t h, std::size_t cell, std::uint8_t lo = 0, std::uint8_t hi = 255) {
    Image img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::uint8_t v = ((x / cell + y / cell) % 2 == 0) ? hi : lo;
            img.set(x, y, v, v, v);
        }
    return img;
}

inline Image delta_image(std::size_t w, std::size_t h, std::size_t x0, std::size_t y0) {
    Image img(w, h);
    img.set(x0, y0, 255, 255, 255);
    return img;
}

inline double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    Tensor c(Shape{a.rows(), b.cols()}, 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
            c.at(i, j) = s;
        }
    return c;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace planet::testing
