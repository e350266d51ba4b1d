#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace planet {

/// 8-bit RGB raster, row-major, channels interleaved R,G,B.
///
/// Any non-zero size is representable; the gradient and Laplacian based
/// signatures additionally require a 3x3 support and check for it.
class Image {
public:
    Image() = default;
    Image(std::size_t width, std::size_t height);
    Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels_[(y * width_ + x) * 3 + c]; }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels_[(y * width_ + x) * 3 + c]; }
    void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    const std::vector<std::uint8_t>& bytes() const noexcept { return pixels_; }

    /// Cyclic shift: output(x, y) = input(x - dx, y - dy) on the torus.
    Image shifted(std::size_t dx, std::size_t dy) const;
    /// Rotates by 90 degrees counter-clockwise (as displayed, y down).
    Image rotated90() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

}  // namespace planet
