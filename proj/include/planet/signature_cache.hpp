#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "planet/signatures.hpp"

namespace planet::data {

// Binary layout, little-endian:
//   "PSIG" | u16 version (1) | u16 color_bins | u16 struct_bins | u16 texture_bins
//   | f32 tau_rel | u32 count | count x (u16 id_len | id bytes | f32[dim])
inline constexpr char kCacheMagic[4] = {'P', 'S', 'I', 'G'};
inline constexpr std::uint16_t kCacheVersion = 1;

struct CacheEntry {
    std::string id;
    std::vector<double> signature;  // holds f32-representable values after a read
};

std::vector<std::uint8_t> encode_signature_cache(const sig::SignatureConfig& cfg, const std::vector<CacheEntry>& entries);
/// Raises FormatError on bad magic/version/truncation and ConfigError when the
/// stored bin counts or tau_rel differ from `expected`.
std::vector<CacheEntry> decode_signature_cache(std::span<const std::uint8_t> bytes, const sig::SignatureConfig& expected);

void write_signature_cache(const std::filesystem::path& path, const sig::SignatureConfig& cfg,
                           const std::vector<CacheEntry>& entries);
std::vector<CacheEntry> read_signature_cache(const std::filesystem::path& path, const sig::SignatureConfig& expected);

/// id -> signature lookup built from cache entries.
std::unordered_map<std::string, std::vector<double>> index_cache(const std::vector<CacheEntry>& entries);

}  // namespace planet::data
