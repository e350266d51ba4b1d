#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "planet/image.hpp"
#include "planet/manifest.hpp"

// Desk-scale stand-in corpus with ground truth by construction.
//
// Every sample is a 64x64 tile realising three attributes: a hue class, a
// stripe orientation (one per orientation-histogram bin) and a surface
// texture. The description names all three, so the mined signature of the
// tile is an oracle for what the text says.
namespace planet::data {

struct ColorClass {
    std::array<std::string, 3> names;  // first entry is the canonical name
    std::array<int, 3> rgb;
};

enum class TextureClass : std::uint8_t { Smooth = 0, Noisy = 1, Checkered = 2 };
inline constexpr std::size_t kTextureClasses = 3;

const std::vector<ColorClass>& color_palette();

struct SyntheticAttributes {
    std::size_t color = 0;
    std::size_t orientation = 0;  // index of the orientation-histogram bin
    TextureClass texture = TextureClass::Smooth;

    friend bool operator==(const SyntheticAttributes&, const SyntheticAttributes&) = default;
};

struct SyntheticOptions {
    std::size_t image_size = 64;
    std::size_t orientation_classes = 18;  // must equal the structure bins used for mining
    std::size_t regions = 4;
    double split_ratio = 0.9;
};

struct SyntheticCorpus {
    std::vector<Sample> samples;
    std::vector<Image> images;
    std::vector<SyntheticAttributes> attributes;
};

/// Integer wave vector whose Sobel-measured orientation lies closest to the
/// centre of orientation bin `cls`. Integer cycles keep the stripes periodic
/// on the torus, so the tile has no wrap-around seam.
std::array<int, 2> stripe_wave_vector(std::size_t cls, std::size_t classes, std::size_t size);

Image render_tile(const SyntheticAttributes& attrs, std::uint64_t sample_seed, const SyntheticOptions& opt = {});
std::string describe_tile(const SyntheticAttributes& attrs, std::uint64_t sample_seed, const SyntheticOptions& opt = {});

/// Road bearing (degrees) quoted in descriptions of orientation class `cls`.
int road_bearing_degrees(std::size_t cls, std::size_t classes);

/// Pure function of (n, seed, options).
SyntheticCorpus make_synthetic(std::size_t n, std::uint64_t seed, const SyntheticOptions& opt = {});

/// make_synthetic, then writes out_dir/images/<id>.ppm and out_dir/manifest.jsonl.
SyntheticCorpus generate_synthetic(std::size_t n, std::uint64_t seed, const std::filesystem::path& out_dir,
                                   const SyntheticOptions& opt = {});

/// Hue class recovered from a mined colour histogram: the palette entry
/// whose mean stripe shade is nearest to the per-channel histogram means.
std::size_t recover_color_class(const std::vector<double>& color_hist, std::size_t bins);

}  // namespace planet::data
