#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "planet/image.hpp"

// Parameter-free statistics mined from an image and used as fixed
// supervision targets: a per-channel colour histogram, a masked histogram
// of gradient orientations and a histogram of log Laplacian energy.
//
// Every spatial operator wraps around the image borders, so all per-pixel
// quantities are equivariant under cyclic shifts and the histograms are
// exactly shift invariant.
namespace planet::sig {

struct SignatureConfig {
    std::size_t color_bins = 16;   // per channel
    std::size_t struct_bins = 18;  // over [0, pi)
    std::size_t texture_bins = 16;
    double tau_rel = 0.15;         // gradient suppression coefficient

    std::size_t color_dim() const { return 3 * color_bins; }
    std::size_t dim() const { return 3 * color_bins + struct_bins + texture_bins; }
    /// Throws ConfigError when a bin count is < 2 or tau_rel is outside (0, 1).
    void validate() const;

    friend bool operator==(const SignatureConfig&, const SignatureConfig&) = default;
};

/// Scalar field over an image grid, row-major (index y * width + x).
struct Field {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

/// Indexed [dy][dx]; the centre tap is [1][1].
using Kernel3x3 = std::array<std::array<double, 3>, 3>;

inline constexpr Kernel3x3 kSobelX{{{-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}}};
inline constexpr Kernel3x3 kSobelY{{{-1.0, -2.0, -1.0}, {0.0, 0.0, 0.0}, {1.0, 2.0, 1.0}}};
inline constexpr Kernel3x3 kLaplacian4{{{0.0, 1.0, 0.0}, {1.0, -4.0, 1.0}, {0.0, 1.0, 0.0}}};

struct GradientField {
    Field magnitude;
    Field orientation;      // radians in [0, pi)
    std::vector<bool> mask; // the valid structure set
};

struct TextureField {
    Field energy;
    Field log_energy;
};

struct PhysicalSignature {
    std::vector<double> color;      // R || G || B histograms
    std::vector<double> structure;
    std::vector<double> texture;
    std::vector<double> combined;   // color || structure || texture
};

/// BT.601 luma, 0.299 R + 0.587 G + 0.114 B.
Field to_grayscale(const Image& img);

/// out(x, y) = sum k[dy][dx] * field((x + dx - 1) mod W, (y + dy - 1) mod H).
Field conv3x3_circular(const Field& field, const Kernel3x3& kernel);

std::vector<double> color_signature(const Image& img, std::size_t bins);

struct StructureResult {
    std::vector<double> histogram;
    GradientField field;
};
StructureResult structure_signature(const Image& img, const SignatureConfig& cfg);

struct TextureResult {
    std::vector<double> histogram;
    TextureField field;
};
TextureResult texture_signature(const Image& img, const SignatureConfig& cfg);

PhysicalSignature mine_signature(const Image& img, const SignatureConfig& cfg = {});

}  // namespace planet::sig
