#include "planet/image.hpp"

#include "planet/errors.hpp"

namespace planet {

Image::Image(std::size_t width, std::size_t height) : width_(width), height_(height), pixels_(width * height * 3, 0) {
    if (width == 0 || height == 0) throw DimensionError("image extents must be positive");
}

Image::Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width == 0 || height == 0) throw DimensionError("image extents must be positive");
    if (pixels_.size() != width * height * 3)
        throw DimensionError("image payload holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                             std::to_string(width * height * 3));
}

void Image::set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels_[(y * width_ + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
}

Image Image::shifted(std::size_t dx, std::size_t dy) const {
    Image out(width_, height_);
    for (std::size_t y = 0; y < height_; ++y)
        for (std::size_t x = 0; x < width_; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at((x + dx) % width_, (y + dy) % height_, c) = at(x, y, c);
    return out;
}

Image Image::rotated90() const {
    // new(x', y') with x' = y, y' = W - 1 - x
    Image out(height_, width_);
    for (std::size_t y = 0; y < height_; ++y)
        for (std::size_t x = 0; x < width_; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at(y, width_ - 1 - x, c) = at(x, y, c);
    return out;
}

}  // namespace planet
