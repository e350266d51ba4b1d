#include "planet/ppm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "planet/errors.hpp"

namespace planet::data {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t read_uint(const char* what) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw FormatError(std::string("PPM header: expected ") + what);
        std::size_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (v > (1u << 24)) throw FormatError(std::string("PPM header: ") + what + " too large");
            ++pos_;
        }
        return v;
    }

    std::size_t& pos() { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (magic P6)");
    HeaderReader rd(bytes);
    rd.pos() = 2;
    if (rd.pos() < bytes.size() && !std::isspace(bytes[rd.pos()]) && bytes[rd.pos()] != '#')
        throw FormatError("PPM header: magic must be followed by whitespace");
    const std::size_t width = rd.read_uint("width");
    const std::size_t height = rd.read_uint("height");
    const std::size_t maxval = rd.read_uint("maxval");
    if (width == 0 || height == 0) throw FormatError("PPM header: zero image extent");
    if (maxval != 255) throw UnsupportedError("PPM maxval " + std::to_string(maxval) + " unsupported (only 255)");
    if (rd.pos() >= bytes.size() || !std::isspace(bytes[rd.pos()]))
        throw FormatError("PPM header: missing whitespace after maxval");
    ++rd.pos();

    const std::size_t expected = width * height * 3;
    const std::size_t available = bytes.size() - rd.pos();
    if (available < expected)
        throw LengthError("PPM payload has " + std::to_string(available) + " bytes, expected " +
                          std::to_string(expected));
    auto first = bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos());
    return Image(width, height, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(expected)));
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    const std::string header =
        "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.bytes().begin(), img.bytes().end());
    return out;
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_ppm(bytes);
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write image " + path.string());
    const auto bytes = encode_ppm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace planet::data
