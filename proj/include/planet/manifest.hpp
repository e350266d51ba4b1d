#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace planet::data {

enum class Split { Train, Test };

const char* split_name(Split s);

struct Sample {
    std::string id;
    std::string image;  // as written in the manifest; relative to its directory
    double lat = 0.0;
    double lon = 0.0;
    std::string text;
    std::string region;
    std::optional<Split> split;
};

struct Manifest {
    std::filesystem::path base_dir;
    std::vector<Sample> samples;

    std::filesystem::path image_path(const Sample& s) const;
    bool fully_split() const;
};

/// Reads newline-delimited flat JSON records (id, image, lat, lon, text,
/// region and an optional split). Blank lines are skipped; unknown keys are
/// ignored. ParseError carries the 1-based line number; duplicate ids and
/// out-of-range coordinates raise ValidationError.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& content, std::filesystem::path base_dir = {});

std::string format_manifest(const std::vector<Sample>& samples);
void write_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples);

/// Seeded 64-bit hash of an id; the basis of split assignment.
std::uint64_t split_hash(const std::string& id, std::uint64_t seed);

/// Assigns train/test per sample: train iff the id's seeded hash, mapped to
/// [0, 1), is below `ratio`. Depends on nothing but (id, seed, ratio), so the
/// result is independent of manifest order.
void split_dataset(std::vector<Sample>& samples, double ratio, std::uint64_t seed);

}  // namespace planet::data
