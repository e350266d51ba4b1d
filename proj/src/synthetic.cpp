#include "planet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "planet/errors.hpp"
#include "planet/ppm.hpp"
#include "planet/random.hpp"

namespace planet::data {

namespace {

// stripe brightness swings between kDark and 1.0 of the base colour
constexpr double kDark = 0.65;
constexpr int kJitter = 6;
constexpr double kNoiseSigma = 6.0;
constexpr int kCheckerAmplitude = 10;
constexpr double kGridSpacingM = 100.0;
constexpr int kGridCells = 32;
constexpr double kMetersPerDegree = 6371000.0 * std::numbers::pi / 180.0;

struct RegionSite {
    double lat, lon;
};

// one site per synthetic subset
constexpr std::array<RegionSite, 8> kRegionSites{{
    {48.8566, 2.3522},
    {40.7128, -74.0060},
    {35.6762, 139.6503},
    {-33.8688, 151.2093},
    {-23.5505, -46.6333},
    {30.0444, 31.2357},
    {55.7558, 37.6173},
    {19.4326, -99.1332},
}};

const std::array<std::array<std::string, 3>, kTextureClasses> kTexturePhrases{{
    {"smooth asphalt texture", "smooth paved ground", "even polished surfaces"},
    {"rough gravel texture", "grainy weathered ground", "coarse rubble surfaces"},
    {"checkered tile texture", "tiled checkerboard paving", "gridded mosaic surfaces"},
}};

const std::array<std::string, 3> kOrientationPhrases{"roads running at", "streets aligned at", "avenues oriented at"};
const std::array<std::string, 3> kLeads{"mostly", "largely", "predominantly"};
const std::array<std::string, 4> kSurfaces{"surfaces", "rooftops", "buildings", "facades"};

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// orientation measured by Sobel on a sampled plane wave with phase steps (a, b)
double sobel_orientation(int kx, int ky, std::size_t size) {
    const double a = 2.0 * std::numbers::pi * kx / static_cast<double>(size);
    const double b = 2.0 * std::numbers::pi * ky / static_cast<double>(size);
    double theta = std::atan2(std::sin(b) * (1.0 + std::cos(a)), std::sin(a) * (1.0 + std::cos(b)));
    if (theta < 0.0) theta += std::numbers::pi;
    if (theta >= std::numbers::pi) theta -= std::numbers::pi;
    return theta;
}

std::string sample_id(std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i);
    const std::size_t width = std::max<std::size_t>(5, std::to_string(n > 0 ? n - 1 : 0).size());
    return "syn" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

const std::vector<ColorClass>& color_palette() {
    // every hue keeps one channel near zero, so its colour histogram peaks in a known bin
    static const std::vector<ColorClass> palette{
        {{"crimson", "scarlet", "red"}, {205, 4, 40}},
        {{"orange", "amber", "tangerine"}, {235, 120, 4}},
        {{"golden", "yellow", "mustard"}, {220, 190, 4}},
        {{"green", "emerald", "leafy"}, {40, 160, 4}},
        {{"teal", "turquoise", "cyan"}, {4, 150, 160}},
        {{"blue", "azure", "cobalt"}, {4, 70, 210}},
        {{"violet", "purple", "lilac"}, {140, 4, 190}},
        {{"lime", "chartreuse", "citrus"}, {150, 225, 4}},
    };
    return palette;
}

std::array<int, 2> stripe_wave_vector(std::size_t cls, std::size_t classes, std::size_t size) {
    if (classes < 2 || cls >= classes) throw DomainError("orientation class out of range");
    const double target = (static_cast<double>(cls) + 0.5) * std::numbers::pi / static_cast<double>(classes);
    std::array<int, 2> best{0, 0};
    double best_err = std::numeric_limits<double>::infinity();
    // 6..10 cycles per tile: coarse enough to survive Sobel, fine enough for many angles
    for (int kx = -10; kx <= 10; ++kx) {
        for (int ky = 0; ky <= 10; ++ky) {
            const double r = std::hypot(kx, ky);
            if (r < 6.0 || r > 10.0) continue;
            const double err = std::abs(sobel_orientation(kx, ky, size) - target);
            if (err < best_err - 1e-12) {
                best_err = err;
                best = {kx, ky};
            }
        }
    }
    return best;
}

int road_bearing_degrees(std::size_t cls, std::size_t classes) {
    const double gradient_deg = (static_cast<double>(cls) + 0.5) * 180.0 / static_cast<double>(classes);
    return static_cast<int>(std::lround(std::fmod(gradient_deg + 90.0, 180.0)));
}

Image render_tile(const SyntheticAttributes& attrs, std::uint64_t sample_seed, const SyntheticOptions& opt) {
    const auto& palette = color_palette();
    if (attrs.color >= palette.size()) throw DomainError("colour class out of range");
    Rng rng(sample_seed);
    // one brightness offset for all channels keeps the hue's channel ordering intact
    const int jitter = static_cast<int>(rng.below(2 * kJitter + 1)) - kJitter;
    std::array<double, 3> base{};
    for (std::size_t c = 0; c < 3; ++c) base[c] = std::clamp(palette[attrs.color].rgb[c] + jitter, 0, 255);
    const auto [kx, ky] = stripe_wave_vector(attrs.orientation, opt.orientation_classes, opt.image_size);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const std::size_t n = opt.image_size;

    Image img(n, n);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            const double u = 2.0 * std::numbers::pi * (kx * static_cast<double>(x) + ky * static_cast<double>(y)) /
                             static_cast<double>(n);
            const double m = kDark + (1.0 - kDark) * 0.5 * (1.0 + std::sin(u + phase));
            double offset = 0.0;
            if (attrs.texture == TextureClass::Noisy) offset = kNoiseSigma * rng.normal();
            if (attrs.texture == TextureClass::Checkered) offset = ((x + y) % 2 == 0) ? kCheckerAmplitude : -kCheckerAmplitude;
            img.set(x, y, clamp_byte(base[0] * m + offset), clamp_byte(base[1] * m + offset),
                    clamp_byte(base[2] * m + offset));
        }
    }
    return img;
}

std::string describe_tile(const SyntheticAttributes& attrs, std::uint64_t sample_seed, const SyntheticOptions& opt) {
    Rng rng(splitmix64(sample_seed ^ 0x7465787473ULL));
    const auto& names = color_palette().at(attrs.color).names;
    const std::string color = names[rng.below(names.size())];
    const std::string lead = kLeads[rng.below(kLeads.size())];
    const std::string surface = kSurfaces[rng.below(kSurfaces.size())];
    const std::string orient = kOrientationPhrases[rng.below(kOrientationPhrases.size())] + " " +
                               std::to_string(road_bearing_degrees(attrs.orientation, opt.orientation_classes)) +
                               " degrees";
    const auto& tex_options = kTexturePhrases[static_cast<std::size_t>(attrs.texture)];
    const std::string texture = tex_options[rng.below(tex_options.size())];

    switch (rng.below(3)) {
        case 0:
            return lead + " " + color + " " + surface + " with " + orient + " and " + texture + ".";
        case 1: {
            std::string t = texture;
            t[0] = static_cast<char>(t[0] - 'a' + 'A');
            return t + " under " + color + " " + surface + ", " + orient + ".";
        }
        default: {
            std::string o = orient;
            o[0] = static_cast<char>(o[0] - 'a' + 'A');
            return o + "; " + lead + " " + color + " " + surface + " and " + texture + ".";
        }
    }
}

SyntheticCorpus make_synthetic(std::size_t n, std::uint64_t seed, const SyntheticOptions& opt) {
    if (n == 0) throw ValidationError("synthetic corpus needs at least one sample");
    if (opt.regions == 0 || opt.regions > kRegionSites.size()) throw ValidationError("unsupported region count");
    if (opt.image_size < 16) throw ValidationError("synthetic tiles must be at least 16 pixels wide");
    const auto& palette = color_palette();

    SyntheticCorpus corpus;
    corpus.samples.reserve(n);
    corpus.images.reserve(n);
    corpus.attributes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, i);
        const std::size_t region = rng.below(opt.regions);

        // each region over-represents two hues (mild domain shift between subsets)
        std::vector<double> weights(palette.size(), 1.0);
        weights[(2 * region) % palette.size()] = 3.0;
        weights[(2 * region + 1) % palette.size()] = 3.0;
        double total = 0.0;
        for (double w : weights) total += w;
        double pick = rng.uniform() * total;
        std::size_t color = 0;
        while (color + 1 < palette.size() && pick >= weights[color]) pick -= weights[color++];

        SyntheticAttributes attrs;
        attrs.color = color;
        attrs.orientation = rng.below(opt.orientation_classes);
        attrs.texture = static_cast<TextureClass>(rng.below(kTextureClasses));
        const std::uint64_t tile_seed = rng.next();

        const auto site = kRegionSites[region];
        const auto gi = static_cast<double>(rng.below(kGridCells)) - kGridCells / 2.0;
        const auto gj = static_cast<double>(rng.below(kGridCells)) - kGridCells / 2.0;
        const double dlat = kGridSpacingM / kMetersPerDegree;
        const double dlon = dlat / std::cos(site.lat * std::numbers::pi / 180.0);

        Sample s;
        s.id = sample_id(i, n);
        s.image = "images/" + s.id + ".ppm";
        s.lat = site.lat + gi * dlat;
        s.lon = site.lon + gj * dlon;
        s.text = describe_tile(attrs, tile_seed, opt);
        s.region = "region" + std::to_string(region + 1);

        corpus.images.push_back(render_tile(attrs, tile_seed, opt));
        corpus.samples.push_back(std::move(s));
        corpus.attributes.push_back(attrs);
    }
    split_dataset(corpus.samples, opt.split_ratio, seed);
    return corpus;
}

SyntheticCorpus generate_synthetic(std::size_t n, std::uint64_t seed, const std::filesystem::path& out_dir,
                                   const SyntheticOptions& opt) {
    SyntheticCorpus corpus = make_synthetic(n, seed, opt);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
    for (std::size_t i = 0; i < corpus.samples.size(); ++i)
        write_ppm(out_dir / corpus.samples[i].image, corpus.images[i]);
    write_manifest(out_dir / "manifest.jsonl", corpus.samples);
    return corpus;
}

std::size_t recover_color_class(const std::vector<double>& color_hist, std::size_t bins) {
    if (color_hist.size() != 3 * bins) throw DimensionError("colour histogram length does not match bins");
    std::array<double, 3> mean{};
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < bins; ++k)
            mean[c] += color_hist[c * bins + k] * (static_cast<double>(k) + 0.5) * 256.0 / static_cast<double>(bins);
    const auto& palette = color_palette();
    // stripe modulation averages to this fraction of the base colour
    const double shade = 0.5 * (1.0 + kDark);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < palette.size(); ++p) {
        double d = 0.0;
        for (std::size_t c = 0; c < 3; ++c) d += std::pow(mean[c] - shade * palette[p].rgb[c], 2);
        if (d < best_d) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

}  // namespace planet::data
