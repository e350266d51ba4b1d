#include "planet/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "planet/errors.hpp"
#include "planet/hashing.hpp"

namespace planet::data {

using nlohmann::json;

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

std::filesystem::path Manifest::image_path(const Sample& s) const {
    std::filesystem::path p(s.image);
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

bool Manifest::fully_split() const {
    for (const auto& s : samples)
        if (!s.split) return false;
    return !samples.empty();
}

namespace {

std::string require_string(const json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError("manifest line " + std::to_string(line) + ": missing field '" + key + "'");
    if (!it->is_string())
        throw ParseError("manifest line " + std::to_string(line) + ": field '" + key + "' must be a string");
    return it->get<std::string>();
}

double require_number(const json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError("manifest line " + std::to_string(line) + ": missing field '" + key + "'");
    if (!it->is_number())
        throw ParseError("manifest line " + std::to_string(line) + ": field '" + key + "' must be a number");
    return it->get<double>();
}

}  // namespace

Manifest parse_manifest(const std::string& content, std::filesystem::path base_dir) {
    Manifest m;
    m.base_dir = std::move(base_dir);
    std::unordered_map<std::string, std::size_t> seen;  // id -> line
    std::istringstream in(content);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError("manifest line " + std::to_string(line) + ": " + e.what());
        }
        if (!rec.is_object()) throw ParseError("manifest line " + std::to_string(line) + ": record is not an object");

        Sample s;
        s.id = require_string(rec, "id", line);
        s.image = require_string(rec, "image", line);
        s.lat = require_number(rec, "lat", line);
        s.lon = require_number(rec, "lon", line);
        s.text = require_string(rec, "text", line);
        s.region = require_string(rec, "region", line);
        if (auto it = rec.find("split"); it != rec.end() && !it->is_null()) {
            const auto v = it->is_string() ? it->get<std::string>() : std::string{};
            if (v == "train") s.split = Split::Train;
            else if (v == "test") s.split = Split::Test;
            else throw ParseError("manifest line " + std::to_string(line) + ": split must be 'train' or 'test'");
        }

        if (s.id.empty()) throw ValidationError("manifest line " + std::to_string(line) + ": empty id");
        if (!(s.lat >= -90.0 && s.lat <= 90.0))
            throw ValidationError("manifest line " + std::to_string(line) + ": latitude out of range for id '" + s.id + "'");
        if (!(s.lon >= -180.0 && s.lon <= 180.0))
            throw ValidationError("manifest line " + std::to_string(line) + ": longitude out of range for id '" + s.id + "'");
        if (auto [it, fresh] = seen.emplace(s.id, line); !fresh)
            throw ValidationError("duplicate id '" + s.id + "' on lines " + std::to_string(it->second) + " and " +
                                  std::to_string(line));
        m.samples.push_back(std::move(s));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path.parent_path());
}

std::string format_manifest(const std::vector<Sample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        json rec = json::object();
        rec["id"] = s.id;
        rec["image"] = s.image;
        rec["lat"] = s.lat;
        rec["lon"] = s.lon;
        rec["text"] = s.text;
        rec["region"] = s.region;
        if (s.split) rec["split"] = split_name(*s.split);
        out += rec.dump();
        out += '\n';
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << format_manifest(samples);
    if (!out) throw IoError("short write to " + path.string());
}

std::uint64_t split_hash(const std::string& id, std::uint64_t seed) {
    return splitmix64(fnv1a64(id) ^ splitmix64(seed));
}

void split_dataset(std::vector<Sample>& samples, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must lie in (0, 1)");
    for (auto& s : samples) {
        const double u = static_cast<double>(split_hash(s.id, seed) >> 11) * 0x1.0p-53;
        s.split = u < ratio ? Split::Train : Split::Test;
    }
}

}  // namespace planet::data
