#include "planet/signatures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "planet/errors.hpp"

namespace planet::sig {

void SignatureConfig::validate() const {
    if (color_bins < 2 || struct_bins < 2 || texture_bins < 2)
        throw ConfigError("signature bin counts must be at least 2");
    if (color_bins > 256) throw ConfigError("at most 256 colour bins per channel");
    if (!(tau_rel > 0.0 && tau_rel < 1.0)) throw ConfigError("tau_rel must lie in (0, 1)");
}

namespace {

void require_support(const Image& img) {
    if (img.width() < 3 || img.height() < 3)
        throw DimensionError("signature mining needs at least a 3x3 image, got " + std::to_string(img.width()) + "x" +
                             std::to_string(img.height()));
}

std::vector<double> normalized(const std::vector<std::size_t>& counts, std::size_t total) {
    std::vector<double> h(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) h[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return h;
}

// Luma in thousandths: integer-valued, so filter responses are exact and a
// flat region responds with exactly zero.
Field luma_milli(const Image& img) {
    Field f{img.width(), img.height(), std::vector<double>(img.pixel_count())};
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            f.values[y * img.width() + x] = 299.0 * img.at(x, y, 0) + 587.0 * img.at(x, y, 1) + 114.0 * img.at(x, y, 2);
    return f;
}

Field filter_luma(const Image& img, const Kernel3x3& kernel) {
    Field out = conv3x3_circular(luma_milli(img), kernel);
    for (auto& v : out.values) v /= 1000.0;
    return out;
}

}  // namespace

Field to_grayscale(const Image& img) {
    Field f{img.width(), img.height(), std::vector<double>(img.pixel_count())};
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            f.values[y * img.width() + x] =
                0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    return f;
}

Field conv3x3_circular(const Field& field, const Kernel3x3& kernel) {
    const std::size_t w = field.width, h = field.height;
    if (w < 3 || h < 3) throw DimensionError("conv3x3_circular needs a field of at least 3x3");
    Field out{w, h, std::vector<double>(w * h, 0.0)};
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::size_t dy = 0; dy < 3; ++dy) {
                const std::size_t yy = (y + h + dy - 1) % h;
                for (std::size_t dx = 0; dx < 3; ++dx) {
                    const std::size_t xx = (x + w + dx - 1) % w;
                    acc += kernel[dy][dx] * field.values[yy * w + xx];
                }
            }
            out.values[y * w + x] = acc;
        }
    }
    return out;
}

std::vector<double> color_signature(const Image& img, std::size_t bins) {
    if (bins < 2 || bins > 256) throw ConfigError("colour bins must lie in [2, 256]");
    std::vector<std::size_t> counts(3 * bins, 0);
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            for (std::size_t c = 0; c < 3; ++c) ++counts[c * bins + img.at(x, y, c) * bins / 256];
    return normalized(counts, img.pixel_count());
}

StructureResult structure_signature(const Image& img, const SignatureConfig& cfg) {
    cfg.validate();
    require_support(img);
    const Field gx = filter_luma(img, kSobelX);
    const Field gy = filter_luma(img, kSobelY);
    const std::size_t n = gx.values.size();

    GradientField gf{{gx.width, gx.height, std::vector<double>(n)},
                     {gx.width, gx.height, std::vector<double>(n)},
                     std::vector<bool>(n, false)};
    double max_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gf.magnitude.values[i] = std::sqrt(gx.values[i] * gx.values[i] + gy.values[i] * gy.values[i]);
        double theta = std::atan2(gy.values[i], gx.values[i]);
        if (theta < 0.0) theta += std::numbers::pi;
        if (theta >= std::numbers::pi) theta -= std::numbers::pi;
        gf.orientation.values[i] = theta;
        max_mag = std::max(max_mag, gf.magnitude.values[i]);
    }

    const double threshold = cfg.tau_rel * max_mag;
    std::vector<std::size_t> counts(cfg.struct_bins, 0);
    std::size_t selected = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gf.magnitude.values[i] > threshold)) continue;
        gf.mask[i] = true;
        ++selected;
        auto k = static_cast<std::size_t>(gf.orientation.values[i] * static_cast<double>(cfg.struct_bins) /
                                          std::numbers::pi);
        ++counts[std::min(k, cfg.struct_bins - 1)];
    }

    // No salient structure: no dominant orientation.
    if (selected == 0)
        return {std::vector<double>(cfg.struct_bins, 1.0 / static_cast<double>(cfg.struct_bins)), std::move(gf)};
    return {normalized(counts, selected), std::move(gf)};
}

TextureResult texture_signature(const Image& img, const SignatureConfig& cfg) {
    cfg.validate();
    require_support(img);
    Field energy = filter_luma(img, kLaplacian4);
    for (auto& v : energy.values) v = std::abs(v);
    Field log_energy{energy.width, energy.height, energy.values};
    double max_log = 0.0;
    for (auto& v : log_energy.values) {
        v = std::log1p(v);
        max_log = std::max(max_log, v);
    }

    std::vector<std::size_t> counts(cfg.texture_bins, 0);
    if (max_log == 0.0) {
        // perfectly smooth surface
        counts[0] = log_energy.values.size();
    } else {
        for (double v : log_energy.values) {
            auto k = static_cast<std::size_t>(v / max_log * static_cast<double>(cfg.texture_bins));
            ++counts[std::min(k, cfg.texture_bins - 1)];
        }
    }
    return {normalized(counts, log_energy.values.size()), {std::move(energy), std::move(log_energy)}};
}

PhysicalSignature mine_signature(const Image& img, const SignatureConfig& cfg) {
    cfg.validate();
    PhysicalSignature s;
    s.color = color_signature(img, cfg.color_bins);
    s.structure = structure_signature(img, cfg).histogram;
    s.texture = texture_signature(img, cfg).histogram;
    s.combined.reserve(cfg.dim());
    s.combined.insert(s.combined.end(), s.color.begin(), s.color.end());
    s.combined.insert(s.combined.end(), s.structure.begin(), s.structure.end());
    s.combined.insert(s.combined.end(), s.texture.begin(), s.texture.end());
    return s;
}

}  // namespace planet::sig
