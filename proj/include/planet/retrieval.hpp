#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planet/manifest.hpp"
#include "planet/model.hpp"
#include "planet/tensor.hpp"

namespace planet::eval {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

/// Query-by-gallery scores with the paired gallery index of each query.
struct SimilarityMatrix {
    Tensor scores;  // Q x G
    std::vector<std::string> query_ids;
    std::vector<std::string> gallery_ids;
    std::vector<std::size_t> ground_truth;

    std::size_t queries() const { return scores.rows(); }
    std::size_t gallery() const { return scores.cols(); }
    /// Throws ValidationError when the ground truth is missing or out of range.
    void validate() const;
};

/// Dot products of unit rows. DimensionError when the widths differ.
Tensor similarity_matrix(const Tensor& text, const Tensor& images);

/// 0-based rank of gallery entry `target` in a score row; ties place the
/// lower gallery index first.
std::size_t rank_of(std::span<const double> row, std::size_t target);
/// Best gallery index in a row; ties go to the lower index.
std::size_t top1(std::span<const double> row);

/// Fraction of queries whose ground truth ranks within the top k; k > G is
/// clamped to G. DomainError when k == 0.
double recall_at_k(const SimilarityMatrix& sim, std::size_t k);

/// Great-circle metres on a sphere of radius 6,371,000 m. ValidationError on
/// latitudes outside [-90, 90] or longitudes outside [-180, 180].
double haversine(double lat1, double lon1, double lat2, double lon2);
inline double haversine(const GeoPoint& a, const GeoPoint& b) { return haversine(a.lat, a.lon, b.lat, b.lon); }

/// Fraction of queries whose rank-1 gallery location lies strictly closer
/// than `meters` to the location of their ground-truth gallery entry.
double localization_at(const SimilarityMatrix& sim, const std::vector<GeoPoint>& gallery_coords, double meters);

struct Metrics {
    std::size_t queries = 0;
    double r1 = 0.0, r5 = 0.0, r10 = 0.0;
    std::map<double, double> localization;  // d (metres) -> L@d
};

struct RegionMetrics {
    std::string region;
    Metrics metrics;
};

struct EvalReport {
    std::string mode;  // "in-domain", "cross-domain" or "train"
    std::optional<std::string> holdout;
    std::size_t gallery = 0;
    Metrics overall;
    std::vector<RegionMetrics> regions;  // queries grouped by region, full gallery

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// All metrics of a similarity matrix. `regions` labels each query; pass an
/// empty vector to skip the breakdown.
EvalReport summarize(const SimilarityMatrix& sim, const std::vector<GeoPoint>& gallery_coords,
                     const std::vector<std::string>& query_regions, const std::vector<double>& distances = {150.0});

enum class EvalMode { InDomain, CrossDomain, Train };

struct EvalSpec {
    EvalMode mode = EvalMode::InDomain;
    std::optional<std::string> holdout;  // region kept out of training
    std::vector<double> distances{150.0};
    std::size_t max_queries = 0;         // 0 = all
};

/// Samples an evaluation draws on: in-domain takes the test split outside the
/// held-out region, cross-domain the test split of the held-out region, and
/// train the training split outside it. ValidationError when empty.
std::vector<std::size_t> select_samples(const std::vector<data::Sample>& samples, const EvalSpec& spec);

/// Text queries paired one-to-one with gallery images (sample i's image is
/// gallery entry i).
SimilarityMatrix score_pairs(const model::ModelParams& params, const data::Vocabulary& vocab,
                             const std::vector<data::Sample>& samples, const std::vector<Image>& images);

/// Loads the selected images, encodes everything and summarizes.
EvalReport evaluate(const model::Checkpoint& ckpt, const data::Manifest& manifest, const EvalSpec& spec);

std::string mode_name(EvalMode m);

}  // namespace planet::eval
