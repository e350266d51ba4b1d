#include "planet/binary_io.hpp"

#include <fstream>
#include <iterator>

#include "planet/errors.hpp"

namespace planet {

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
    if (remaining() < n) throw FormatError(what_ + ": truncated");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t ByteReader::get(std::size_t n) {
    const auto b = bytes(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace planet
