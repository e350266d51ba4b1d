#include "planet/signature_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "planet/binary_io.hpp"
#include "planet/errors.hpp"

namespace planet::data {

std::vector<std::uint8_t> encode_signature_cache(const sig::SignatureConfig& cfg, const std::vector<CacheEntry>& entries) {
    cfg.validate();
    ByteWriter w;
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kCacheMagic), 4));
    w.u16(kCacheVersion);
    w.u16(static_cast<std::uint16_t>(cfg.color_bins));
    w.u16(static_cast<std::uint16_t>(cfg.struct_bins));
    w.u16(static_cast<std::uint16_t>(cfg.texture_bins));
    w.f32(static_cast<float>(cfg.tau_rel));
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.signature.size() != cfg.dim())
            throw ConfigError("signature for '" + e.id + "' has " + std::to_string(e.signature.size()) +
                              " entries, config expects " + std::to_string(cfg.dim()));
        if (e.id.size() > 0xffff) throw ValidationError("id too long for the cache format: " + e.id.substr(0, 32));
        w.u16(static_cast<std::uint16_t>(e.id.size()));
        w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(e.id.data()), e.id.size()));
        for (double v : e.signature) w.f32(static_cast<float>(v));
    }
    return w.take();
}

std::vector<CacheEntry> decode_signature_cache(std::span<const std::uint8_t> bytes, const sig::SignatureConfig& expected) {
    ByteReader r(bytes, "signature cache");
    const auto magic = r.bytes(4);
    if (std::memcmp(magic.data(), kCacheMagic, 4) != 0) throw FormatError("signature cache: bad magic");
    if (const auto version = r.u16(); version != kCacheVersion)
        throw FormatError("signature cache: unsupported version " + std::to_string(version));
    sig::SignatureConfig stored;
    stored.color_bins = r.u16();
    stored.struct_bins = r.u16();
    stored.texture_bins = r.u16();
    const float tau = r.f32();
    if (stored.color_bins != expected.color_bins || stored.struct_bins != expected.struct_bins ||
        stored.texture_bins != expected.texture_bins || tau != static_cast<float>(expected.tau_rel))
        throw ConfigError("signature cache built with bins (" + std::to_string(stored.color_bins) + "," +
                          std::to_string(stored.struct_bins) + "," + std::to_string(stored.texture_bins) +
                          ") tau_rel " + std::to_string(tau) + ", reader expects (" +
                          std::to_string(expected.color_bins) + "," + std::to_string(expected.struct_bins) + "," +
                          std::to_string(expected.texture_bins) + ") tau_rel " + std::to_string(expected.tau_rel));
    const std::size_t count = r.u32();
    const std::size_t dim = expected.dim();
    std::vector<CacheEntry> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        CacheEntry e;
        const std::size_t len = r.u16();
        const auto id = r.bytes(len);
        e.id.assign(reinterpret_cast<const char*>(id.data()), len);
        e.signature.resize(dim);
        for (auto& v : e.signature) v = r.f32();
        entries.push_back(std::move(e));
    }
    if (!r.done()) throw FormatError("signature cache: trailing bytes after last record");
    return entries;
}

void write_signature_cache(const std::filesystem::path& path, const sig::SignatureConfig& cfg,
                           const std::vector<CacheEntry>& entries) {
    write_file(path, encode_signature_cache(cfg, entries));
}

std::vector<CacheEntry> read_signature_cache(const std::filesystem::path& path, const sig::SignatureConfig& expected) {
    return decode_signature_cache(read_file(path), expected);
}

std::unordered_map<std::string, std::vector<double>> index_cache(const std::vector<CacheEntry>& entries) {
    std::unordered_map<std::string, std::vector<double>> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        if (!out.emplace(e.id, e.signature).second) throw ValidationError("signature cache lists '" + e.id + "' twice");
    return out;
}

}  // namespace planet::data
