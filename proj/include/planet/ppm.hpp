#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "planet/image.hpp"

namespace planet::data {

/// Decodes a binary Netpbm "P6" image with maxval 255.
///
/// Header tokens may be separated by any whitespace and interleaved with
/// '#' comments running to end of line; exactly one whitespace byte follows
/// the maxval. Raises FormatError (bad magic/header), UnsupportedError
/// (maxval != 255) or LengthError (short payload).
Image decode_ppm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const Image& img);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& img);

}  // namespace planet::data
